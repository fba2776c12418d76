//! Exercises the C ABI from Rust: handle lifecycles, JSON payloads in both
//! directions, status codes, and the thread-local error message.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use debugraph::graph::{emit_manifest, CodeGraph, EdgeKind, GraphEdge, GraphNode, NodeKind};
use debugraph_ffi::{
    dg_graph_edge_count, dg_graph_free, dg_graph_from_manifest_file, dg_graph_from_manifest_json,
    dg_graph_node_count, dg_graph_to_manifest_json, dg_last_error_message, dg_pdm_free,
    dg_pdm_gc_json, dg_pdm_len, dg_pdm_open, dg_pdm_query_json, dg_pdm_store_json,
    dg_retrieve_json, dg_string_free, dg_version, DgGraph, DgPdm, DgStatus,
};
use tempfile::TempDir;

fn c(text: &str) -> CString {
    CString::new(text).unwrap()
}

/// Copy an owned C string out and release it through the library.
fn take_string(raw: *mut c_char) -> String {
    assert!(!raw.is_null(), "expected an owned string, got null");
    let text = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_string();
    unsafe { dg_string_free(raw) };
    text
}

fn last_error() -> Option<String> {
    let raw = dg_last_error_message();
    if raw.is_null() {
        None
    } else {
        Some(take_string(raw))
    }
}

/// A failure must set a readable message; return it for closer inspection.
fn expect_error(status: DgStatus, expected: DgStatus) -> String {
    assert_eq!(status, expected);
    let message = last_error().expect("failures must set an error message");
    assert!(!message.is_empty());
    message
}

fn sample_manifest() -> String {
    let mut graph = CodeGraph::new();
    for (id, text) in [
        ("file:src/cache.rs", "session cache lookup and eviction"),
        ("file:src/session.rs", "session lifecycle create renew expire"),
        ("file:src/auth.rs", "authentication token verification"),
    ] {
        graph
            .add_node(
                GraphNode::new(id, NodeKind::File, id.trim_start_matches("file:src/"))
                    .with_path(id.trim_start_matches("file:"))
                    .with_text(text),
            )
            .unwrap();
    }
    graph
        .add_edge(GraphEdge::new("file:src/session.rs", "file:src/cache.rs", EdgeKind::Import))
        .unwrap();
    graph
        .add_edge(GraphEdge::new("file:src/auth.rs", "file:src/session.rs", EdgeKind::Import))
        .unwrap();
    serde_json::to_string(&emit_manifest(&graph)).unwrap()
}

fn open_sample_graph() -> *mut DgGraph {
    let manifest = c(&sample_manifest());
    let mut graph: *mut DgGraph = ptr::null_mut();
    let status = unsafe { dg_graph_from_manifest_json(manifest.as_ptr(), false, &mut graph) };
    assert_eq!(status, DgStatus::Ok);
    assert!(!graph.is_null());
    graph
}

#[test]
fn status_codes_are_part_of_the_abi() {
    assert_eq!(DgStatus::Ok as i32, 0);
    assert_eq!(DgStatus::Io as i32, 1);
    assert_eq!(DgStatus::Parse as i32, 2);
    assert_eq!(DgStatus::Graph as i32, 3);
    assert_eq!(DgStatus::Usage as i32, 4);
    assert_eq!(DgStatus::Memory as i32, 5);
    assert_eq!(DgStatus::FixLoop as i32, 6);
    assert_eq!(DgStatus::Eval as i32, 7);
    assert_eq!(DgStatus::Panic as i32, 8);

    let version = dg_version();
    assert!(!version.is_null());
    let text = unsafe { CStr::from_ptr(version) }.to_str().unwrap();
    assert!(text.split('.').count() >= 2, "not a version: {text}");
}

#[test]
fn graph_handles_roundtrip_through_manifest_json() {
    let graph = open_sample_graph();

    let mut nodes = 0usize;
    let mut edges = 0usize;
    unsafe {
        assert_eq!(dg_graph_node_count(graph, &mut nodes), DgStatus::Ok);
        assert_eq!(dg_graph_edge_count(graph, &mut edges), DgStatus::Ok);
    }
    assert_eq!((nodes, edges), (3, 2));

    // Emitted manifest ingests back into an identical graph.
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { dg_graph_to_manifest_json(graph, &mut out) }, DgStatus::Ok);
    let emitted = c(&take_string(out));
    let mut twin: *mut DgGraph = ptr::null_mut();
    assert_eq!(
        unsafe { dg_graph_from_manifest_json(emitted.as_ptr(), false, &mut twin) },
        DgStatus::Ok
    );
    let (mut twin_nodes, mut twin_edges) = (0usize, 0usize);
    unsafe {
        assert_eq!(dg_graph_node_count(twin, &mut twin_nodes), DgStatus::Ok);
        assert_eq!(dg_graph_edge_count(twin, &mut twin_edges), DgStatus::Ok);
        dg_graph_free(twin);
        dg_graph_free(graph);
    }
    assert_eq!((twin_nodes, twin_edges), (nodes, edges));
}

#[test]
fn retrieval_accepts_query_json_and_is_deterministic() {
    let graph = open_sample_graph();
    let query = c(r#"{"text": "session cache lookup", "seed_hints": ["file:src/cache.rs"]}"#);

    let run = |config: *const c_char| -> String {
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { dg_retrieve_json(graph, query.as_ptr(), config, 1_700_000_000, &mut out) };
        assert_eq!(status, DgStatus::Ok);
        take_string(out)
    };

    let first = run(ptr::null());
    let second = run(ptr::null());
    assert_eq!(first, second, "same inputs must serialize identically");

    let payload: serde_json::Value = serde_json::from_str(&first).unwrap();
    let confidence = payload["confidence"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&confidence));
    let members = payload["context"]["members"].as_array().unwrap();
    assert!(!members.is_empty());
    assert!(!payload["context"]["confidence_trace"].as_array().unwrap().is_empty());

    // An explicit config is honored; an impatient tau still yields members.
    let config = c(r#"{"tau": 0.05, "k_max": 2}"#);
    let tuned: serde_json::Value = serde_json::from_str(&run(config.as_ptr())).unwrap();
    assert!(!tuned["context"]["members"].as_array().unwrap().is_empty());

    unsafe { dg_graph_free(graph) };
}

#[test]
fn invalid_inputs_map_to_distinct_status_codes() {
    let mut graph: *mut DgGraph = ptr::null_mut();

    // Null and malformed inputs are caller mistakes, not parse failures.
    let message = expect_error(
        unsafe { dg_graph_from_manifest_json(ptr::null(), false, &mut graph) },
        DgStatus::Usage,
    );
    assert!(message.contains("manifest_json"), "unhelpful message: {message}");
    let garbled = c("{\"nodes\": [");
    expect_error(
        unsafe { dg_graph_from_manifest_json(garbled.as_ptr(), false, &mut graph) },
        DgStatus::Parse,
    );
    let invalid_utf8 = CString::new([0xff, 0xfe]).unwrap();
    expect_error(
        unsafe { dg_graph_from_manifest_json(invalid_utf8.as_ptr(), false, &mut graph) },
        DgStatus::Usage,
    );
    let missing = c("/nonexistent/manifest.json");
    expect_error(
        unsafe { dg_graph_from_manifest_file(missing.as_ptr(), false, &mut graph) },
        DgStatus::Io,
    );

    // Retrieval distinguishes empty queries and bad tuning from bad JSON.
    let graph = open_sample_graph();
    let mut out: *mut c_char = ptr::null_mut();
    let empty_query = c("{}");
    expect_error(
        unsafe { dg_retrieve_json(graph, empty_query.as_ptr(), ptr::null(), 0, &mut out) },
        DgStatus::Usage,
    );
    let query = c(r#"{"seed_hints": ["file:src/cache.rs"]}"#);
    let wild_tau = c(r#"{"tau": 2.5}"#);
    expect_error(
        unsafe { dg_retrieve_json(graph, query.as_ptr(), wild_tau.as_ptr(), 0, &mut out) },
        DgStatus::Usage,
    );
    let broken_query = c("not json");
    expect_error(
        unsafe { dg_retrieve_json(graph, broken_query.as_ptr(), ptr::null(), 0, &mut out) },
        DgStatus::Parse,
    );

    // Success clears the sticky message.
    let mut nodes = 0usize;
    assert_eq!(unsafe { dg_graph_node_count(graph, &mut nodes) }, DgStatus::Ok);
    assert_eq!(last_error(), None);

    unsafe { dg_graph_free(graph) };
}

#[test]
fn pattern_store_flows_through_the_boundary() {
    let dir = TempDir::new().unwrap();
    let root = c(dir.path().join("store").to_str().unwrap());

    let mut pdm: *mut DgPdm = ptr::null_mut();
    assert_eq!(unsafe { dg_pdm_open(root.as_ptr(), &mut pdm) }, DgStatus::Ok);
    let mut len = usize::MAX;
    assert_eq!(unsafe { dg_pdm_len(pdm, &mut len) }, DgStatus::Ok);
    assert_eq!(len, 0);

    let record = c(&serde_json::json!({
        "id": "fix:redis-ttl",
        "pattern": "redis timestamp precision mismatch in cache layer",
        "context_paths": ["src/cache/redis.rs"],
        "fix": "round timestamps to millis before compare",
        "confidence": 0.9,
        "created_at": 1_700_000_000i64,
        "last_used": 1_700_000_000i64,
        "status": "ResolvedFix",
    })
    .to_string());
    assert_eq!(unsafe { dg_pdm_store_json(pdm, record.as_ptr()) }, DgStatus::Ok);
    // Same id again is a memory-integrity error, not a parse error.
    expect_error(unsafe { dg_pdm_store_json(pdm, record.as_ptr()) }, DgStatus::Memory);

    let flaky = c(&serde_json::json!({
        "id": "test:flaky-clock",
        "pattern": "clock skew flake",
        "confidence": 0.3,
        "created_at": 1_700_000_000i64,
        "last_used": 1_700_000_000i64,
        "status": "TestResult",
    })
    .to_string());
    assert_eq!(unsafe { dg_pdm_store_json(pdm, flaky.as_ptr()) }, DgStatus::Ok);
    assert_eq!(unsafe { dg_pdm_len(pdm, &mut len) }, DgStatus::Ok);
    assert_eq!(len, 2);

    // Query ranks the resolved fix first with a strong combined score.
    let signature = c("redis timestamp precision mismatch");
    let paths = c(r#"["src/cache/redis.rs"]"#);
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe {
        dg_pdm_query_json(pdm, signature.as_ptr(), paths.as_ptr(), 1_700_050_000, 5, &mut out)
    };
    assert_eq!(status, DgStatus::Ok);
    let hits: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let rows = hits.as_array().unwrap();
    assert!(!rows.is_empty());
    assert_eq!(rows[0]["record"]["id"], "fix:redis-ttl");
    assert!(rows[0]["score"]["total"].as_f64().unwrap() >= 0.75);

    // Retention: 200 days later the test result ages out, the fix is kept.
    let later = 1_700_000_000 + 200 * 86_400;
    let mut report_out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { dg_pdm_gc_json(pdm, later, &mut report_out) }, DgStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(report_out)).unwrap();
    assert_eq!(report["evicted"]["TestResult"], serde_json::json!(["test:flaky-clock"]));
    unsafe { dg_pdm_free(pdm) };

    // Evictions persisted: a fresh handle sees one surviving record.
    let mut reopened: *mut DgPdm = ptr::null_mut();
    assert_eq!(unsafe { dg_pdm_open(root.as_ptr(), &mut reopened) }, DgStatus::Ok);
    assert_eq!(unsafe { dg_pdm_len(reopened, &mut len) }, DgStatus::Ok);
    assert_eq!(len, 1);
    unsafe { dg_pdm_free(reopened) };

    // Freeing null handles is explicitly a no-op.
    unsafe {
        dg_graph_free(ptr::null_mut());
        dg_pdm_free(ptr::null_mut());
        dg_string_free(ptr::null_mut());
    }
}
