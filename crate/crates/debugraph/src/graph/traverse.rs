//! Neighborhood expansion.
//!
//! Traversal treats every edge as bidirectional: a call site leads to its
//! callee and back, a test to the code it covers, and so on. Hop distance is
//! the breadth-first layer at which a node is first reached from the seed
//! set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{effective_weight, edge_priority, CodeGraph, EdgeKind, NodeId};
use crate::error::{Error, Result};

/// All nodes within `1..=k` undirected hops of `seeds`, excluding the seeds
/// themselves. Every seed must exist and `k` must be at least 1.
pub fn k_hop_neighbors(
    graph: &CodeGraph,
    seeds: &BTreeSet<NodeId>,
    k: usize,
) -> Result<BTreeSet<NodeId>> {
    if k == 0 {
        return Err(Error::ZeroHops);
    }
    check_seeds(graph, seeds)?;

    let mut dist: BTreeMap<NodeId, usize> = seeds.iter().map(|s| (s.clone(), 0)).collect();
    let mut queue: VecDeque<NodeId> = seeds.iter().cloned().collect();
    let mut reached = BTreeSet::new();
    while let Some(current) = queue.pop_front() {
        let d = dist[&current];
        if d == k {
            continue;
        }
        for &edge_index in graph.incident(&current) {
            let neighbor = graph.other_endpoint(edge_index, &current);
            if !dist.contains_key(neighbor) {
                dist.insert(neighbor.clone(), d + 1);
                reached.insert(neighbor.clone());
                queue.push_back(neighbor.clone());
            }
        }
    }
    Ok(reached)
}

fn check_seeds(graph: &CodeGraph, seeds: &BTreeSet<NodeId>) -> Result<()> {
    for seed in seeds {
        if !graph.contains(seed) {
            return Err(Error::NodeNotFound(seed.to_string()));
        }
    }
    Ok(())
}

/// How a node was first reached during an expansion.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Discovery {
    /// Breadth-first layer (1-based; seeds are layer 0).
    pub hop: usize,
    /// Best product of effective edge weights along a shortest-hop path
    /// from the seed set.
    pub path_weight: f64,
    /// Kind of the strongest edge that discovered the node, by
    /// (priority, weighted path) — this is what admission filters inspect.
    pub via: EdgeKind,
}

/// Layered expansion that tracks, for every node within `1..=k` hops of the
/// seed set, its hop distance, the best discovery-path weight, and the edge
/// kind that carried the discovery. Seeds are excluded from the result.
pub(crate) fn weighted_expansion(
    graph: &CodeGraph,
    seeds: &BTreeSet<NodeId>,
    k: usize,
    now: i64,
) -> Result<BTreeMap<NodeId, Discovery>> {
    if k == 0 {
        return Err(Error::ZeroHops);
    }
    check_seeds(graph, seeds)?;

    // path weight of the best shortest-hop path to each settled node
    let mut best: BTreeMap<NodeId, f64> = seeds.iter().map(|s| (s.clone(), 1.0)).collect();
    let mut found: BTreeMap<NodeId, Discovery> = BTreeMap::new();
    let mut layer: BTreeSet<NodeId> = seeds.clone();

    for hop in 1..=k {
        // Gather the next layer: nodes adjacent to the current layer that
        // have not been settled yet.
        let mut next: BTreeMap<NodeId, (f64, f64, EdgeKind)> = BTreeMap::new();
        for parent in &layer {
            let parent_weight = best[parent];
            for &edge_index in graph.incident(parent) {
                let neighbor = graph.other_endpoint(edge_index, parent).clone();
                if best.contains_key(&neighbor) {
                    continue;
                }
                let edge = &graph.edges()[edge_index];
                let weight = parent_weight * effective_weight(edge, now)?;
                let priority = edge_priority(edge.kind);
                let entry = next.entry(neighbor).or_insert((f64::MIN, f64::MIN, edge.kind));
                // Track the heaviest path and, independently, the
                // highest-priority discovering edge.
                if weight > entry.0 {
                    entry.0 = weight;
                }
                let current_priority = edge_priority(entry.2);
                if (priority, weight) > (current_priority, entry.1) {
                    entry.1 = weight;
                    entry.2 = edge.kind;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layer = BTreeSet::new();
        for (id, (path_weight, _, via)) in next {
            best.insert(id.clone(), path_weight);
            found.insert(
                id.clone(),
                Discovery {
                    hop,
                    path_weight,
                    via,
                },
            );
            layer.insert(id);
        }
    }
    Ok(found)
}
