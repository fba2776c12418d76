//! Graph manifest: the JSON wire format for pre-extracted graphs.
//!
//! ```json
//! {
//!   "nodes": [{"id": "file:src/pay.rs", "kind": "File", "name": "pay.rs",
//!              "path": "src/pay.rs", "span": [1, 80], "timestamp": 1700000000,
//!              "text": "fn refund() { ... }"}],
//!   "edges": [{"src": "file:src/pay.rs", "dst": "file:src/ledger.rs",
//!              "kind": "Import", "timestamp": 1700000000, "annotation": "ledger"}]
//! }
//! ```
//!
//! Only `id`, `kind`, and `name` (nodes) and `src`, `dst`, `kind` (edges) are
//! required; everything else defaults. Strict ingestion rejects unknown
//! fields, lenient ingestion records a warning per unknown field and
//! continues.


use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CodeGraph, EdgeKind, GraphEdge, GraphNode, NodeId, NodeKind};
use crate::error::{Error, Result};

/// Serialized node record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestNode {
    pub id: String,
    pub kind: NodeKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(u32, u32)>,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub text: String,
}

/// Serialized edge record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEdge {
    pub src: String,
    pub dst: String,
    pub kind: EdgeKind,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

/// A whole graph in wire form.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GraphManifest {
    #[serde(default)]
    pub nodes: Vec<ManifestNode>,
    #[serde(default)]
    pub edges: Vec<ManifestEdge>,
}

impl GraphManifest {
    /// Build the graph this manifest describes, applying the same
    /// validation as ingestion (dangling edges, duplicates, clock order).
    pub fn build(&self) -> Result<CodeGraph> {
        build_graph(self)
    }
}

/// How to treat fields the schema does not know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Unknown fields are errors.
    #[default]
    Strict,
    /// Unknown fields are dropped, one warning each.
    Lenient,
}

/// Result of an ingestion: the built graph plus any lenient-mode warnings.
#[derive(Debug)]
pub struct IngestReport {
    pub graph: CodeGraph,
    pub warnings: Vec<String>,
}

const NODE_FIELDS: [&str; 7] = ["id", "kind", "name", "path", "span", "timestamp", "text"];
const EDGE_FIELDS: [&str; 5] = ["src", "dst", "kind", "timestamp", "annotation"];
const TOP_FIELDS: [&str; 2] = ["nodes", "edges"];

/// Parse manifest JSON and build the graph it describes.
///
/// Syntax errors surface with serde's line/column context; schema errors name
/// the offending field; dangling or duplicate edges name the offending edge.
pub fn ingest_manifest(json: &str, mode: IngestMode) -> Result<IngestReport> {
    let mut value: Value =
        serde_json::from_str(json).map_err(|e| Error::Manifest(format!("parse error: {e}")))?;
    let mut warnings = Vec::new();
    scrub_unknown_fields(&mut value, mode, &mut warnings)?;
    let manifest: GraphManifest = serde_json::from_value(value)
        .map_err(|e| Error::Manifest(format!("schema error: {e}")))?;
    let graph = build_graph(&manifest)?;
    Ok(IngestReport { graph, warnings })
}

fn scrub_unknown_fields(
    value: &mut Value,
    mode: IngestMode,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let top = value
        .as_object_mut()
        .ok_or_else(|| Error::Manifest("manifest root must be an object".into()))?;
    scrub_object(top, &TOP_FIELDS, "manifest", mode, warnings)?;
    for (section, fields) in [("nodes", &NODE_FIELDS[..]), ("edges", &EDGE_FIELDS[..])] {
        if let Some(Value::Array(items)) = top.get_mut(section) {
            for (index, item) in items.iter_mut().enumerate() {
                if let Some(object) = item.as_object_mut() {
                    let location = format!("{section}[{index}]");
                    scrub_object(object, fields, &location, mode, warnings)?;
                }
            }
        }
    }
    Ok(())
}

fn scrub_object(
    object: &mut serde_json::Map<String, Value>,
    known: &[&str],
    location: &str,
    mode: IngestMode,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let unknown: Vec<String> = object
        .keys()
        .filter(|k| !known.contains(&k.as_str()))
        .cloned()
        .collect();
    for field in unknown {
        match mode {
            IngestMode::Strict => {
                return Err(Error::Manifest(format!(
                    "unknown field `{field}` in {location}"
                )));
            }
            IngestMode::Lenient => {
                warnings.push(format!("ignored unknown field `{field}` in {location}"));
                object.remove(&field);
            }
        }
    }
    Ok(())
}

fn build_graph(manifest: &GraphManifest) -> Result<CodeGraph> {
    let mut graph = CodeGraph::new();
    for node in &manifest.nodes {
        graph.add_node(GraphNode {
            id: NodeId::new(node.id.clone()),
            kind: node.kind,
            name: node.name.clone(),
            path: node.path.clone(),
            span: node.span,
            timestamp: node.timestamp,
            text: node.text.clone(),
        })?;
    }
    for edge in &manifest.edges {
        graph.add_edge(GraphEdge {
            src: NodeId::new(edge.src.clone()),
            dst: NodeId::new(edge.dst.clone()),
            kind: edge.kind,
            timestamp: edge.timestamp,
            annotation: edge.annotation.clone(),
        })?;
    }
    Ok(graph)
}

/// Serialize a graph back into wire form. Nodes appear in lexicographic id
/// order and edges in insertion order, so emission is deterministic and
/// `ingest(emit(g))` reproduces `g` exactly.
pub fn emit_manifest(graph: &CodeGraph) -> GraphManifest {
    GraphManifest {
        nodes: graph
            .nodes()
            .map(|n| ManifestNode {
                id: n.id.to_string(),
                kind: n.kind,
                name: n.name.clone(),
                path: n.path.clone(),
                span: n.span,
                timestamp: n.timestamp,
                text: n.text.clone(),
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| ManifestEdge {
                src: e.src.to_string(),
                dst: e.dst.to_string(),
                kind: e.kind,
                timestamp: e.timestamp,
                annotation: e.annotation.clone(),
            })
            .collect(),
    }
}
