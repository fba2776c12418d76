//! Adaptive graph-guided retrieval.
//!
//! Given a debugging query, retrieval seeds itself from explicit hints,
//! stack frames, and lexical matches, then expands the seed neighborhood
//! hop by hop. Each iteration scores the frontier, keeps the best slice,
//! admits nodes reached over implementation- or dependency-grade edges, and
//! measures an entropy-based confidence over the assembled context. Depth
//! only escalates when an iteration's confidence gain stalls below
//! `epsilon`; the whole loop runs at most `k_max - k_initial + 1`
//! iterations, so termination is structural rather than probabilistic.
//!
//! Confidence is `1 - H(C)/H_max` where `H` is the Shannon entropy of the
//! normalized member relevances and `H_max = ln(max(n, 2))`: a context with
//! one dominant member scores 1.0, a uniform one scores ~0, and an empty or
//! all-zero one scores 0 by definition.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge_priority, CodeGraph, EdgeKind, NodeId};
use crate::text::{similarity, tokenize, Embedder};

mod expand;

pub use expand::{flat_topk_retrieve, retrieve, retrieve_with_embedder};

/// A debugging question posed to the graph.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Query {
    /// Natural-language problem description (may quote error text).
    #[serde(default)]
    pub text: String,
    /// Node ids or repository paths the caller already suspects.
    #[serde(default)]
    pub seed_hints: Vec<String>,
    /// `(path, line)` frames, innermost first.
    #[serde(default)]
    pub stack_frames: Vec<(String, u32)>,
}

impl Query {
    pub fn from_text(text: impl Into<String>) -> Self {
        Query {
            text: text.into(),
            ..Query::default()
        }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.seed_hints.push(hint.into());
        self
    }

    pub fn with_frame(mut self, path: impl Into<String>, line: u32) -> Self {
        self.stack_frames.push((path.into(), line));
        self
    }

    /// At least one of text/hints/frames must be present.
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() && self.seed_hints.is_empty() && self.stack_frames.is_empty()
        {
            return Err(Error::EmptyQuery);
        }
        Ok(())
    }
}

/// Retrieval tuning. The defaults are the contract values; override only
/// what you must.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Confidence threshold that stops expansion.
    pub tau: f64,
    /// Maximum hop depth.
    pub k_max: usize,
    /// Candidates kept per iteration = `ceil(selection_ratio * k)`.
    pub selection_ratio: f64,
    /// Minimum confidence gain; anything less escalates depth.
    pub epsilon: f64,
    /// Per-kind traversal priority overrides (kind -> priority in (0, 1]).
    pub priority_overrides: std::collections::BTreeMap<EdgeKind, f64>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            tau: 0.89,
            k_max: 5,
            selection_ratio: 8.0,
            epsilon: 0.02,
            priority_overrides: Default::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| Err(Error::InvalidConfig(reason.to_string()));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau must lie in (0, 1]");
        }
        if self.k_max == 0 {
            return fail("k_max must be at least 1");
        }
        if self.selection_ratio < 1.0 {
            return fail("selection_ratio must be at least 1");
        }
        if self.epsilon <= 0.0 {
            return fail("epsilon must be positive");
        }
        for (&kind, &priority) in &self.priority_overrides {
            if !(priority > 0.0 && priority <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "priority for {kind} must lie in (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Traversal priority for `kind`, honoring overrides.
    pub fn priority(&self, kind: EdgeKind) -> f64 {
        self.priority_overrides
            .get(&kind)
            .copied()
            .unwrap_or_else(|| edge_priority(kind))
    }
}

/// One retrieved node with its scoring provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredNode {
    pub node: NodeId,
    /// Query relevance in `[0, 1]`: lexical similarity times path weight.
    pub relevance: f64,
    /// Hop depth at which the node was admitted (0 for seeds).
    pub hop: usize,
    /// Product of effective edge weights along the discovery path.
    pub path_weight: f64,
}

/// Why expansion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Confidence reached tau.
    ThresholdReached,
    /// The depth schedule ran out before tau.
    KMaxExhausted,
    /// Nothing admissible was ever found beyond the seeds.
    NoCandidates,
}

/// One `(k, confidence)` sample; the first entry is the seed-only context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: usize,
    pub confidence: f64,
}

/// The assembled context returned by retrieval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievedContext {
    /// Members in descending relevance order (ties: lexicographic id).
    pub members: Vec<ScoredNode>,
    pub confidence_trace: Vec<TracePoint>,
    pub terminated_by: Termination,
    /// Distinct non-seed nodes examined during expansion.
    pub visited_count: usize,
}

impl RetrievedContext {
    pub fn confidence(&self) -> f64 {
        confidence(&self.members)
    }

    pub fn member_ids(&self) -> Vec<NodeId> {
        self.members.iter().map(|m| m.node.clone()).collect()
    }

    /// Outer-loop iterations executed (the trace keeps one extra entry for
    /// the seed-only context).
    pub fn iterations(&self) -> usize {
        self.confidence_trace.len().saturating_sub(1)
    }
}

/// Entropy-based context confidence over member relevances.
pub fn confidence(members: &[ScoredNode]) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let total: f64 = members.iter().map(|m| m.relevance).sum();
    if total <= 0.0 {
        return 0.0;
    }
    // Pairwise summation keeps uniform distributions exact (e.g. four equal
    // members yield H = ln 4 bit-for-bit, so confidence is exactly 0).
    let terms: Vec<f64> = members
        .iter()
        .filter(|m| m.relevance > 0.0)
        .map(|m| {
            let p = m.relevance / total;
            -(p * p.ln())
        })
        .collect();
    let entropy = pairwise_sum(&terms);
    let h_max = (members.len().max(2) as f64).ln();
    (1.0 - entropy / h_max).clamp(0.0, 1.0)
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Estimate the starting hop depth from query shape: hints alone start
/// shallow, stack frames or a substantial description start at 2, and both
/// together start at 3.
pub fn estimate_complexity(query: &Query) -> usize {
    let long_text = tokenize(&query.text).len() >= 8;
    let framed = !query.stack_frames.is_empty();
    match (framed, long_text) {
        (true, true) => 3,
        (true, false) | (false, true) => 2,
        (false, false) => 1,
    }
}

/// Query relevance of a node: text similarity scaled by the discovery-path
/// weight. `path_weight` is 1 for seeds.
pub fn compute_relevance(
    query: &Query,
    node_text: &str,
    path_weight: f64,
    embedder: Option<&dyn Embedder>,
) -> f64 {
    similarity(&query.text, node_text, embedder) * path_weight
}

/// Seed selection: explicit hints (id or path), stack-frame locations
/// (path match with the span containing the line; span-less nodes count as
/// whole-file spans), and the top five lexical matches for the query text.
/// Falls back to the single best lexical match so a non-empty graph always
/// yields at least one seed.
pub fn extract_semantic_nodes(
    query: &Query,
    graph: &CodeGraph,
    embedder: Option<&dyn Embedder>,
) -> Result<BTreeSet<NodeId>> {
    query.validate()?;
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let mut seeds = BTreeSet::new();
    for hint in &query.seed_hints {
        let as_id = NodeId::new(hint.clone());
        if graph.contains(&as_id) {
            seeds.insert(as_id);
            continue;
        }
        for node in graph.nodes() {
            if node.path == *hint {
                seeds.insert(node.id.clone());
            }
        }
    }

    for (path, line) in &query.stack_frames {
        for node in graph.nodes() {
            if &node.path == path {
                let contains = node.span.map_or(true, |(s, e)| *line >= s && *line <= e);
                if contains {
                    seeds.insert(node.id.clone());
                }
            }
        }
    }

    if !query.text.trim().is_empty() {
        let mut ranked: Vec<(f64, &NodeId)> = graph
            .nodes()
            .map(|n| (similarity(&query.text, &n.text, embedder), &n.id))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        seeds.extend(
            ranked
                .iter()
                .take(5)
                .filter(|(sim, _)| *sim > 0.0)
                .map(|(_, id)| (*id).clone()),
        );
        if seeds.is_empty() {
            // Global best match even at zero similarity: keeps the
            // guarantee that a non-empty graph seeds something.
            seeds.insert(ranked[0].1.clone());
        }
    } else if seeds.is_empty() {
        // Hints and frames matched nothing and there is no text to rank by;
        // fall back to the lexicographically first node.
        seeds.insert(graph.nodes().next().unwrap().id.clone());
    }

    Ok(seeds)
}
