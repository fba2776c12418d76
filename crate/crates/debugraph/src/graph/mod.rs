//! Multi-signal code graph.
//!
//! Nodes are source artifacts (files, functions, tests, log sites, commits,
//! doc chunks, ...) and edges carry the signal that links them: syntax,
//! imports, calls, test coverage, log emission, stack traces, co-commits,
//! review comments, and doc references. The graph is undirected for
//! traversal purposes — an edge makes both endpoints mutually reachable —
//! while edge records keep their original orientation for reporting.
//!
//! Storage is deterministic: node iteration follows lexicographic id order
//! and edge lists preserve insertion order, so identical inputs rebuild
//! byte-identical structures.

mod manifest;
mod scan;
mod traverse;
mod weights;

pub use manifest::{
    emit_manifest, ingest_manifest, GraphManifest, IngestMode, IngestReport, ManifestEdge,
    ManifestNode,
};
pub use scan::{scan_repository, CommitRecord, LinePatternExtractor, ScanOptions, ScanReport, SourceExtractor};
pub use traverse::k_hop_neighbors;
pub(crate) use traverse::weighted_expansion;
pub use weights::{base_weight, edge_priority, effective_weight, COCOMMIT_DECAY_RATE};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable, unique node identifier. Ordering is lexicographic on the raw
/// string, which is the tie-break order used everywhere determinism matters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Artifact kinds tracked by the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    File,
    Function,
    Class,
    Module,
    Commit,
    TestCase,
    LogSite,
    StackFrame,
    DocChunk,
    PullRequest,
    ConfigEntry,
}

impl NodeKind {
    pub const ALL: [NodeKind; 11] = [
        NodeKind::File,
        NodeKind::Function,
        NodeKind::Class,
        NodeKind::Module,
        NodeKind::Commit,
        NodeKind::TestCase,
        NodeKind::LogSite,
        NodeKind::StackFrame,
        NodeKind::DocChunk,
        NodeKind::PullRequest,
        NodeKind::ConfigEntry,
    ];
}

/// Relationship kinds, each carrying a distinct retrieval signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    AstChild,
    Import,
    Call,
    TestCovers,
    EmitsLog,
    StackTraceStep,
    CoCommit,
    PrComment,
    DocRef,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 9] = [
        EdgeKind::AstChild,
        EdgeKind::Import,
        EdgeKind::Call,
        EdgeKind::TestCovers,
        EdgeKind::EmitsLog,
        EdgeKind::StackTraceStep,
        EdgeKind::CoCommit,
        EdgeKind::PrComment,
        EdgeKind::DocRef,
    ];
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One artifact in the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
    /// Repository-relative path. Empty for commit/PR-style nodes.
    #[serde(default)]
    pub path: String,
    /// Inclusive line span `(start, end)` within `path`, when meaningful.
    #[serde(default)]
    pub span: Option<(u32, u32)>,
    /// Seconds since the Unix epoch; creation or last-touch time.
    #[serde(default)]
    pub timestamp: i64,
    /// Searchable content: source text, message, doc body, ...
    #[serde(default)]
    pub text: String,
}

impl GraphNode {
    pub fn new(id: impl Into<NodeId>, kind: NodeKind, name: impl Into<String>) -> Self {
        GraphNode {
            id: id.into(),
            kind,
            name: name.into(),
            path: String::new(),
            span: None,
            timestamp: 0,
            text: String::new(),
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = path.into();
        self
    }

    pub fn with_span(mut self, start: u32, end: u32) -> Self {
        self.span = Some((start, end));
        self
    }

    pub fn with_timestamp(mut self, ts: i64) -> Self {
        self.timestamp = ts;
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidNode {
                id: self.id.to_string(),
                reason: reason.to_string(),
            })
        };
        if self.id.as_str().is_empty() {
            return fail("empty id");
        }
        if self.timestamp < 0 {
            return fail("negative timestamp");
        }
        if let Some((start, end)) = self.span {
            if start > end {
                return fail("span start exceeds span end");
            }
        }
        match self.kind {
            NodeKind::Commit if !self.path.is_empty() => fail("Commit nodes carry no path"),
            NodeKind::File | NodeKind::Function | NodeKind::Class if self.path.is_empty() => {
                fail("File/Function/Class nodes need a path")
            }
            _ => Ok(()),
        }
    }
}

/// One typed relation between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    /// Seconds since the Unix epoch; when the relation was observed.
    #[serde(default)]
    pub timestamp: i64,
    /// Free-form detail (imported symbol, log template, PR number, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

impl GraphEdge {
    pub fn new(src: impl Into<NodeId>, dst: impl Into<NodeId>, kind: EdgeKind) -> Self {
        GraphEdge {
            src: src.into(),
            dst: dst.into(),
            kind,
            timestamp: 0,
            annotation: None,
        }
    }

    pub fn at(mut self, ts: i64) -> Self {
        self.timestamp = ts;
        self
    }

    pub fn note(mut self, annotation: impl Into<String>) -> Self {
        self.annotation = Some(annotation.into());
        self
    }
}

/// The code graph: nodes keyed by id plus an incident-edge index.
#[derive(Debug, Clone, Default)]
pub struct CodeGraph {
    nodes: BTreeMap<NodeId, GraphNode>,
    edges: Vec<GraphEdge>,
    /// node id -> indices into `edges` (incident in either direction).
    incidence: BTreeMap<NodeId, Vec<usize>>,
    /// (src, dst, kind) triples for the parallel-edge rule.
    edge_keys: BTreeSet<(NodeId, NodeId, EdgeKind)>,
}

impl CodeGraph {
    pub fn new() -> Self {
        CodeGraph::default()
    }

    pub fn add_node(&mut self, node: GraphNode) -> Result<()> {
        node.validate()?;
        if self.nodes.contains_key(&node.id) {
            return Err(Error::DuplicateNode(node.id.to_string()));
        }
        self.incidence.insert(node.id.clone(), Vec::new());
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Add an edge. Both endpoints must already exist and the same
    /// `(src, dst, kind)` triple may appear only once; parallel edges are
    /// fine as long as their kinds differ.
    pub fn add_edge(&mut self, edge: GraphEdge) -> Result<()> {
        for endpoint in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(endpoint) {
                return Err(Error::DanglingEdge {
                    src: edge.src.to_string(),
                    dst: edge.dst.to_string(),
                    kind: edge.kind.to_string(),
                    missing: endpoint.to_string(),
                });
            }
        }
        if edge.timestamp < 0 {
            return Err(Error::Manifest(format!(
                "edge {} -[{}]-> {} has a negative timestamp",
                edge.src, edge.kind, edge.dst
            )));
        }
        let key = (edge.src.clone(), edge.dst.clone(), edge.kind);
        if self.edge_keys.contains(&key) {
            return Err(Error::DuplicateEdge {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
                kind: edge.kind.to_string(),
            });
        }
        let index = self.edges.len();
        self.incidence.get_mut(&edge.src).unwrap().push(index);
        if edge.dst != edge.src {
            self.incidence.get_mut(&edge.dst).unwrap().push(index);
        }
        self.edge_keys.insert(key);
        self.edges.push(edge);
        Ok(())
    }

    /// Add an edge, or refresh the timestamp of an existing one with the
    /// same `(src, dst, kind)` to the newer of the two. Repository scans use
    /// this: a relation observed again recently should count as recent.
    pub fn merge_edge(&mut self, edge: GraphEdge) -> Result<()> {
        let key = (edge.src.clone(), edge.dst.clone(), edge.kind);
        if self.edge_keys.contains(&key) {
            for existing in self.edges.iter_mut() {
                if existing.src == edge.src && existing.dst == edge.dst && existing.kind == edge.kind
                {
                    if edge.timestamp > existing.timestamp {
                        existing.timestamp = edge.timestamp;
                    }
                    return Ok(());
                }
            }
            unreachable!("edge key tracked without a stored edge");
        }
        self.add_edge(edge)
    }

    pub fn node(&self, id: &NodeId) -> Option<&GraphNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes in lexicographic id order.
    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Indices into [`CodeGraph::edges`] incident to `id` (either endpoint).
    pub fn incident(&self, id: &NodeId) -> &[usize] {
        self.incidence.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The neighbor across edge `index` from `id`.
    pub fn other_endpoint(&self, index: usize, id: &NodeId) -> &NodeId {
        let edge = &self.edges[index];
        if &edge.src == id {
            &edge.dst
        } else {
            &edge.src
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self, id: &NodeId) -> usize {
        self.incident(id).len()
    }

    /// Maximum degree over all nodes (0 for an empty or edgeless graph).
    pub fn max_degree(&self) -> usize {
        self.incidence.values().map(Vec::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, kind: NodeKind) -> GraphNode {
        let mut n = GraphNode::new(id, kind, id);
        if matches!(kind, NodeKind::File | NodeKind::Function | NodeKind::Class) {
            n.path = format!("src/{id}.rs");
        }
        n
    }

    #[test]
    fn duplicate_node_rejected() {
        let mut g = CodeGraph::new();
        g.add_node(node("a", NodeKind::File)).unwrap();
        let err = g.add_node(node("a", NodeKind::File)).unwrap_err();
        assert!(matches!(err, Error::DuplicateNode(_)));
    }

    #[test]
    fn dangling_edge_rejected_naming_missing_node() {
        let mut g = CodeGraph::new();
        g.add_node(node("a", NodeKind::File)).unwrap();
        let err = g
            .add_edge(GraphEdge::new("a", "ghost", EdgeKind::Import))
            .unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn parallel_edges_need_distinct_kinds() {
        let mut g = CodeGraph::new();
        g.add_node(node("a", NodeKind::File)).unwrap();
        g.add_node(node("b", NodeKind::File)).unwrap();
        g.add_edge(GraphEdge::new("a", "b", EdgeKind::Import)).unwrap();
        // Same endpoints, different kind: fine.
        g.add_edge(GraphEdge::new("a", "b", EdgeKind::CoCommit)).unwrap();
        // Exact repeat: rejected.
        let err = g
            .add_edge(GraphEdge::new("a", "b", EdgeKind::Import))
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn merge_edge_keeps_newest_timestamp() {
        let mut g = CodeGraph::new();
        g.add_node(node("a", NodeKind::File)).unwrap();
        g.add_node(node("b", NodeKind::File)).unwrap();
        g.merge_edge(GraphEdge::new("a", "b", EdgeKind::CoCommit).at(100)).unwrap();
        g.merge_edge(GraphEdge::new("a", "b", EdgeKind::CoCommit).at(50)).unwrap();
        assert_eq!(g.edges()[0].timestamp, 100, "older observation must not regress");
        g.merge_edge(GraphEdge::new("a", "b", EdgeKind::CoCommit).at(500)).unwrap();
        assert_eq!(g.edges()[0].timestamp, 500);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn kind_specific_validation() {
        let mut g = CodeGraph::new();
        // Commit with a path is malformed.
        let mut commit = GraphNode::new("c1", NodeKind::Commit, "c1");
        commit.path = "src/a.rs".into();
        assert!(g.add_node(commit).is_err());
        // Function without a path is malformed.
        let bare_fn = GraphNode::new("f1", NodeKind::Function, "f1");
        assert!(g.add_node(bare_fn).is_err());
        // Negative timestamps and inverted spans are malformed.
        assert!(g
            .add_node(node("t", NodeKind::File).with_timestamp(-5))
            .is_err());
        assert!(g.add_node(node("s", NodeKind::File).with_span(9, 3)).is_err());
    }

    #[test]
    fn degree_counts_both_directions() {
        let mut g = CodeGraph::new();
        for id in ["a", "b", "c"] {
            g.add_node(node(id, NodeKind::File)).unwrap();
        }
        g.add_edge(GraphEdge::new("a", "b", EdgeKind::Import)).unwrap();
        g.add_edge(GraphEdge::new("c", "a", EdgeKind::Call)).unwrap();
        assert_eq!(g.degree(&"a".into()), 2);
        assert_eq!(g.degree(&"b".into()), 1);
        assert_eq!(g.max_degree(), 2);
    }

    #[test]
    fn node_iteration_is_lexicographic() {
        let mut g = CodeGraph::new();
        for id in ["zeta", "alpha", "mid"] {
            g.add_node(node(id, NodeKind::File)).unwrap();
        }
        let order: Vec<&str> = g.nodes().map(|n| n.id.as_str()).collect();
        assert_eq!(order, vec!["alpha", "mid", "zeta"]);
    }
}
