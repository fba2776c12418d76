//! The expansion loop and the flat baseline.

use std::collections::BTreeSet;

use super::{
    confidence, estimate_complexity, extract_semantic_nodes, RetrievalConfig, Query,
    RetrievedContext, ScoredNode, Termination, TracePoint,
};
use crate::error::{Error, Result};
use crate::graph::CodeGraph;
use crate::text::{similarity, Embedder};

/// Priority at or above which a discovery edge admits its node outright;
/// below it (documentation-grade edges) admission needs the starvation
/// valve: at least half the current members scoring under 0.2.
const ADMIT_PRIORITY: f64 = 0.8;
const STARVATION_RELEVANCE: f64 = 0.2;

/// Adaptive retrieval with the default lexical scorer.
pub fn retrieve(
    graph: &CodeGraph,
    query: &Query,
    config: &RetrievalConfig,
    now: i64,
) -> Result<RetrievedContext> {
    retrieve_with_embedder(graph, query, config, now, None)
}

/// Adaptive retrieval with an optional embedding model supplying the text
/// similarity.
pub fn retrieve_with_embedder(
    graph: &CodeGraph,
    query: &Query,
    config: &RetrievalConfig,
    now: i64,
    embedder: Option<&dyn Embedder>,
) -> Result<RetrievedContext> {
    config.validate()?;
    query.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let seeds = extract_semantic_nodes(query, graph, embedder)?;
    let mut members = score_seed_members(graph, query, &seeds, embedder);

    let k_initial = estimate_complexity(query).min(config.k_max);
    let mut k = k_initial;
    // Hard iteration budget: one productive depth level per iteration in
    // the worst case. This is what makes termination a structural property.
    let budget = config.k_max - k_initial + 1;

    let mut member_ids: BTreeSet<_> = seeds.clone();
    let mut frontier_seeds = seeds;
    let mut examined: BTreeSet<_> = BTreeSet::new();
    let mut trace = vec![TracePoint {
        k,
        confidence: confidence(&members),
    }];
    let mut previous = trace[0].confidence;
    let mut admitted_any = false;
    let mut iterations = 0;

    while previous < config.tau && k <= config.k_max && iterations < budget {
        iterations += 1;
        let expansion = crate::graph::weighted_expansion(graph, &frontier_seeds, k, now)?;

        let mut candidates: Vec<(ScoredNode, f64)> = Vec::new(); // (node, priority)
        for (id, discovery) in expansion {
            if member_ids.contains(&id) {
                continue;
            }
            examined.insert(id.clone());
            let node = graph.node(&id).expect("expansion yields known nodes");
            let relevance =
                similarity(&query.text, &node.text, embedder) * discovery.path_weight;
            candidates.push((
                ScoredNode {
                    node: id,
                    relevance,
                    hop: discovery.hop,
                    path_weight: discovery.path_weight,
                },
                config.priority(discovery.via),
            ));
        }

        if candidates.is_empty() {
            // Nothing new at this depth: zero gain, escalate.
            trace.push(TracePoint { k, confidence: previous });
            k += 1;
            continue;
        }

        candidates.sort_by(|a, b| {
            b.0.relevance
                .partial_cmp(&a.0.relevance)
                .unwrap()
                .then(b.1.partial_cmp(&a.1).unwrap())
                .then(a.0.node.cmp(&b.0.node))
        });
        let keep = ((config.selection_ratio * k as f64).ceil() as usize).max(1);
        candidates.truncate(keep);

        // Starvation valve, evaluated against the members present at the
        // start of the iteration.
        let weak = members
            .iter()
            .filter(|m| m.relevance < STARVATION_RELEVANCE)
            .count();
        let starving = weak * 2 >= members.len();

        for (candidate, priority) in candidates {
            if priority >= ADMIT_PRIORITY || starving {
                member_ids.insert(candidate.node.clone());
                frontier_seeds.insert(candidate.node.clone());
                members.push(candidate);
                admitted_any = true;
            }
        }

        let current = confidence(&members);
        trace.push(TracePoint { k, confidence: current });
        let gain = current - previous;
        previous = current;
        if gain < config.epsilon {
            k += 1;
        }
    }

    let terminated_by = if previous >= config.tau {
        Termination::ThresholdReached
    } else if !admitted_any {
        Termination::NoCandidates
    } else {
        Termination::KMaxExhausted
    };

    sort_members(&mut members);
    Ok(RetrievedContext {
        members,
        confidence_trace: trace,
        terminated_by,
        visited_count: examined.len(),
    })
}

/// Score the seed set as hop-0 members with unit path weight.
fn score_seed_members(
    graph: &CodeGraph,
    query: &Query,
    seeds: &BTreeSet<crate::graph::NodeId>,
    embedder: Option<&dyn Embedder>,
) -> Vec<ScoredNode> {
    seeds
        .iter()
        .map(|id| {
            let node = graph.node(id).expect("seeds exist");
            ScoredNode {
                node: id.clone(),
                relevance: similarity(&query.text, &node.text, embedder),
                hop: 0,
                path_weight: 1.0,
            }
        })
        .collect()
}

fn sort_members(members: &mut [ScoredNode]) {
    members.sort_by(|a, b| {
        b.relevance
            .partial_cmp(&a.relevance)
            .unwrap()
            .then(a.node.cmp(&b.node))
    });
}

/// Structure-blind baseline: rank every node by text similarity alone and
/// keep the best `budget` with positive similarity. Same result shape as
/// [`retrieve`] so the two slot into the same scoring pipeline.
pub fn flat_topk_retrieve(
    graph: &CodeGraph,
    query: &Query,
    budget: usize,
) -> Result<RetrievedContext> {
    query.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut members: Vec<ScoredNode> = graph
        .nodes()
        .map(|n| ScoredNode {
            node: n.id.clone(),
            relevance: similarity(&query.text, &n.text, None),
            hop: 0,
            path_weight: 1.0,
        })
        .filter(|m| m.relevance > 0.0)
        .collect();
    sort_members(&mut members);
    let visited_count = graph.node_count();
    members.truncate(budget);
    let terminated_by = if members.is_empty() {
        Termination::NoCandidates
    } else {
        Termination::KMaxExhausted
    };
    let trace = vec![TracePoint {
        k: 0,
        confidence: confidence(&members),
    }];
    Ok(RetrievedContext {
        members,
        confidence_trace: trace,
        terminated_by,
        visited_count,
    })
}
