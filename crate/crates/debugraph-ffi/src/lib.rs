//! C ABI over the debugraph engine.
//!
//! Shape of the interface:
//!
//! - **Opaque handles.** [`DgGraph`] and [`DgPdm`] are heap-allocated by
//!   constructors, used behind pointers, and released by their `_free`
//!   functions. Callers never see the layout.
//! - **JSON payloads.** Structured inputs and outputs cross the boundary as
//!   UTF-8 JSON strings in the same schemas the CLI uses, which keeps the
//!   ABI to a handful of functions.
//! - **Status codes.** Every fallible call returns [`DgStatus`]; `DG_STATUS_OK`
//!   is zero. On failure a thread-local message is set and can be fetched
//!   with [`dg_last_error_message`].
//!
//! Strings returned through `out` parameters are owned by the caller and
//! must be released with [`dg_string_free`]. No function stores the pointers
//! it is given beyond the duration of the call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use debugraph::graph::{emit_manifest, ingest_manifest, CodeGraph, IngestMode};
use debugraph::pdm::{DebugPattern, PdmStore, Probe};
use debugraph::retrieval::{retrieve, Query, RetrievalConfig};
use debugraph::{Error, ErrorCategory};

/// Result of every fallible call. Zero is success; nonzero values mirror the
/// engine's error categories, plus [`DgStatus::Panic`] for a caught internal
/// fault.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgStatus {
    Ok = 0,
    /// Filesystem or other I/O failure.
    Io = 1,
    /// Malformed JSON or manifest.
    Parse = 2,
    /// Graph-structure violation (unknown node, dangling edge, ...).
    Graph = 3,
    /// Invalid arguments or configuration.
    Usage = 4,
    /// Pattern-memory violation (duplicate id, time regression, ...).
    Memory = 5,
    /// Fix-loop failure.
    FixLoop = 6,
    /// Evaluation-harness failure.
    Eval = 7,
    /// An internal invariant broke; the handle is still valid but the
    /// operation had no effect.
    Panic = 8,
}

impl From<ErrorCategory> for DgStatus {
    fn from(category: ErrorCategory) -> Self {
        match category {
            ErrorCategory::Io => DgStatus::Io,
            ErrorCategory::Parse => DgStatus::Parse,
            ErrorCategory::Graph => DgStatus::Graph,
            ErrorCategory::Usage => DgStatus::Usage,
            ErrorCategory::Memory => DgStatus::Memory,
            ErrorCategory::FixLoop => DgStatus::FixLoop,
            ErrorCategory::Eval => DgStatus::Eval,
        }
    }
}

/// Opaque handle to an in-memory code graph.
pub struct DgGraph {
    inner: CodeGraph,
}

/// Opaque handle to an open pattern store.
pub struct DgPdm {
    inner: PdmStore,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(err: &Error) -> DgStatus {
    set_last_error(err.to_string());
    DgStatus::from(err.category())
}

fn usage(message: impl Into<String>) -> DgStatus {
    set_last_error(message.into());
    DgStatus::Usage
}

/// Run `body`, trapping panics so they never unwind across the C boundary.
fn guarded(body: impl FnOnce() -> DgStatus) -> DgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic; the operation had no effect".to_string());
            DgStatus::Panic
        }
    }
}

/// Borrow a required UTF-8 argument.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string valid for the call.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DgStatus> {
    if ptr.is_null() {
        return Err(usage(format!("{what} must not be null")));
    }
    // SAFETY: non-null and NUL-terminated per the caller's contract.
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| usage(format!("{what} must be valid UTF-8")))
}

/// Hand an owned string to the caller through `out`.
fn give_string(out: *mut *mut c_char, text: String) -> DgStatus {
    match CString::new(text) {
        Ok(c) => {
            // SAFETY: the caller guaranteed `out` is a valid destination.
            unsafe { *out = c.into_raw() };
            clear_last_error();
            DgStatus::Ok
        }
        Err(_) => usage("payload contained an interior NUL byte"),
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, DgStatus> {
    serde_json::from_str(text).map_err(|e| {
        set_last_error(format!("{what}: {e}"));
        DgStatus::Parse
    })
}

// ── library metadata and error reporting ───────────────────────────────────

/// Version of this library as a static NUL-terminated string. Never freed.
#[no_mangle]
pub extern "C" fn dg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A copy of the message from the most recent failure on this thread, or
/// null when the last call succeeded. Release it with [`dg_string_free`].
#[no_mangle]
pub extern "C" fn dg_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |text| text.clone().into_raw())
    })
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `text` must be null or a pointer previously returned by a function in
/// this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dg_string_free(text: *mut c_char) {
    if !text.is_null() {
        // SAFETY: ownership is returned to Rust exactly once per the contract.
        drop(unsafe { CString::from_raw(text) });
    }
}

// ── graph handles ───────────────────────────────────────────────────────────

/// Build a graph from a JSON manifest. With `lenient` set, unknown manifest
/// fields are tolerated instead of rejected. On success `*out_graph` owns the
/// new handle; release it with [`dg_graph_free`].
///
/// # Safety
/// `manifest_json` must be a valid NUL-terminated string and `out_graph` a
/// valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_from_manifest_json(
    manifest_json: *const c_char,
    lenient: bool,
    out_graph: *mut *mut DgGraph,
) -> DgStatus {
    guarded(|| {
        if out_graph.is_null() {
            return usage("out_graph must not be null");
        }
        // SAFETY: forwarded caller contract.
        let text = match unsafe { read_str(manifest_json, "manifest_json") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        let mode = if lenient { IngestMode::Lenient } else { IngestMode::Strict };
        match ingest_manifest(text, mode) {
            Ok(report) => {
                let handle = Box::new(DgGraph { inner: report.graph });
                // SAFETY: out_graph checked non-null above.
                unsafe { *out_graph = Box::into_raw(handle) };
                clear_last_error();
                DgStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Build a graph from a manifest file on disk. See
/// [`dg_graph_from_manifest_json`].
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out_graph` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_from_manifest_file(
    path: *const c_char,
    lenient: bool,
    out_graph: *mut *mut DgGraph,
) -> DgStatus {
    guarded(|| {
        if out_graph.is_null() {
            return usage("out_graph must not be null");
        }
        // SAFETY: forwarded caller contract.
        let path = match unsafe { read_str(path, "path") } {
            Ok(path) => path,
            Err(status) => return status,
        };
        let text = match std::fs::read_to_string(Path::new(path)) {
            Ok(text) => text,
            Err(err) => return fail(&Error::Io(err)),
        };
        let mode = if lenient { IngestMode::Lenient } else { IngestMode::Strict };
        match ingest_manifest(&text, mode) {
            Ok(report) => {
                let handle = Box::new(DgGraph { inner: report.graph });
                // SAFETY: out_graph checked non-null above.
                unsafe { *out_graph = Box::into_raw(handle) };
                clear_last_error();
                DgStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Number of nodes in the graph.
///
/// # Safety
/// `graph` must be a live handle from this library and `out_count` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_node_count(
    graph: *const DgGraph,
    out_count: *mut usize,
) -> DgStatus {
    guarded(|| {
        if graph.is_null() || out_count.is_null() {
            return usage("graph and out_count must not be null");
        }
        // SAFETY: live handle per the contract.
        let graph = unsafe { &*graph };
        // SAFETY: out_count checked non-null above.
        unsafe { *out_count = graph.inner.node_count() };
        clear_last_error();
        DgStatus::Ok
    })
}

/// Number of edges in the graph.
///
/// # Safety
/// `graph` must be a live handle from this library and `out_count` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_edge_count(
    graph: *const DgGraph,
    out_count: *mut usize,
) -> DgStatus {
    guarded(|| {
        if graph.is_null() || out_count.is_null() {
            return usage("graph and out_count must not be null");
        }
        // SAFETY: live handle per the contract.
        let graph = unsafe { &*graph };
        // SAFETY: out_count checked non-null above.
        unsafe { *out_count = graph.inner.edge_count() };
        clear_last_error();
        DgStatus::Ok
    })
}

/// Serialize the graph back to its JSON manifest form. The caller owns
/// `*out_json`.
///
/// # Safety
/// `graph` must be a live handle from this library and `out_json` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_to_manifest_json(
    graph: *const DgGraph,
    out_json: *mut *mut c_char,
) -> DgStatus {
    guarded(|| {
        if graph.is_null() || out_json.is_null() {
            return usage("graph and out_json must not be null");
        }
        // SAFETY: live handle per the contract.
        let graph = unsafe { &*graph };
        let manifest = emit_manifest(&graph.inner);
        match serde_json::to_string_pretty(&manifest) {
            Ok(text) => give_string(out_json, text),
            Err(err) => fail(&Error::Json(err)),
        }
    })
}

/// Release a graph handle. Null is a no-op.
///
/// # Safety
/// `graph` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dg_graph_free(graph: *mut DgGraph) {
    if !graph.is_null() {
        // SAFETY: ownership is returned to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(graph) });
    }
}

// ── retrieval ───────────────────────────────────────────────────────────────

/// Run adaptive retrieval. `query_json` is a query document (`text`,
/// `seed_hints`, `stack_frames`); `config_json` may be null for the default
/// tuning. `now` is the evaluation clock in epoch seconds. On success
/// `*out_json` holds `{"confidence": .., "context": ..}` and belongs to the
/// caller.
///
/// # Safety
/// `graph` must be a live handle from this library; `query_json` must be a
/// valid NUL-terminated string; `config_json` must be null or a valid
/// NUL-terminated string; `out_json` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_retrieve_json(
    graph: *const DgGraph,
    query_json: *const c_char,
    config_json: *const c_char,
    now: i64,
    out_json: *mut *mut c_char,
) -> DgStatus {
    guarded(|| {
        if graph.is_null() || out_json.is_null() {
            return usage("graph and out_json must not be null");
        }
        // SAFETY: live handle per the contract.
        let graph = unsafe { &*graph };
        // SAFETY: forwarded caller contract.
        let query_text = match unsafe { read_str(query_json, "query_json") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        let query: Query = match parse_json(query_text, "query_json") {
            Ok(query) => query,
            Err(status) => return status,
        };
        let config = if config_json.is_null() {
            RetrievalConfig::default()
        } else {
            // SAFETY: non-null, so the caller promises a valid string.
            let config_text = match unsafe { read_str(config_json, "config_json") } {
                Ok(text) => text,
                Err(status) => return status,
            };
            match parse_json(config_text, "config_json") {
                Ok(config) => config,
                Err(status) => return status,
            }
        };
        match retrieve(&graph.inner, &query, &config, now) {
            Ok(context) => {
                let payload = serde_json::json!({
                    "confidence": context.confidence(),
                    "context": context,
                });
                give_string(out_json, payload.to_string())
            }
            Err(err) => fail(&err),
        }
    })
}

// ── pattern memory ──────────────────────────────────────────────────────────

/// Open (or create) a pattern store rooted at `dir`. On success `*out_pdm`
/// owns the handle; release it with [`dg_pdm_free`].
///
/// # Safety
/// `dir` must be a valid NUL-terminated string and `out_pdm` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_open(dir: *const c_char, out_pdm: *mut *mut DgPdm) -> DgStatus {
    guarded(|| {
        if out_pdm.is_null() {
            return usage("out_pdm must not be null");
        }
        // SAFETY: forwarded caller contract.
        let dir = match unsafe { read_str(dir, "dir") } {
            Ok(dir) => dir,
            Err(status) => return status,
        };
        match PdmStore::open(Path::new(dir)) {
            Ok(store) => {
                let handle = Box::new(DgPdm { inner: store });
                // SAFETY: out_pdm checked non-null above.
                unsafe { *out_pdm = Box::into_raw(handle) };
                clear_last_error();
                DgStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Number of live records in the store.
///
/// # Safety
/// `pdm` must be a live handle from this library and `out_count` a valid
/// destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_len(pdm: *const DgPdm, out_count: *mut usize) -> DgStatus {
    guarded(|| {
        if pdm.is_null() || out_count.is_null() {
            return usage("pdm and out_count must not be null");
        }
        // SAFETY: live handle per the contract.
        let pdm = unsafe { &*pdm };
        // SAFETY: out_count checked non-null above.
        unsafe { *out_count = pdm.inner.len() };
        clear_last_error();
        DgStatus::Ok
    })
}

/// Insert one debug-pattern record, given as JSON.
///
/// # Safety
/// `pdm` must be a live handle from this library (and not aliased by a
/// concurrent call) and `record_json` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_store_json(
    pdm: *mut DgPdm,
    record_json: *const c_char,
) -> DgStatus {
    guarded(|| {
        if pdm.is_null() {
            return usage("pdm must not be null");
        }
        // SAFETY: live, unaliased handle per the contract.
        let pdm = unsafe { &mut *pdm };
        // SAFETY: forwarded caller contract.
        let text = match unsafe { read_str(record_json, "record_json") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        let record: DebugPattern = match parse_json(text, "record_json") {
            Ok(record) => record,
            Err(status) => return status,
        };
        match pdm.inner.store(record) {
            Ok(_) => {
                clear_last_error();
                DgStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Rank stored patterns against a probe. `paths_json` may be null or a JSON
/// array of context paths. On success `*out_json` holds an array of
/// `{"record": .., "score": ..}` rows and belongs to the caller.
///
/// # Safety
/// `pdm` must be a live handle from this library; `signature` must be a
/// valid NUL-terminated string; `paths_json` must be null or a valid
/// NUL-terminated string; `out_json` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_query_json(
    pdm: *const DgPdm,
    signature: *const c_char,
    paths_json: *const c_char,
    now: i64,
    limit: usize,
    out_json: *mut *mut c_char,
) -> DgStatus {
    guarded(|| {
        if pdm.is_null() || out_json.is_null() {
            return usage("pdm and out_json must not be null");
        }
        // SAFETY: live handle per the contract.
        let pdm = unsafe { &*pdm };
        // SAFETY: forwarded caller contract.
        let signature = match unsafe { read_str(signature, "signature") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        let paths: Vec<String> = if paths_json.is_null() {
            Vec::new()
        } else {
            // SAFETY: non-null, so the caller promises a valid string.
            let text = match unsafe { read_str(paths_json, "paths_json") } {
                Ok(text) => text,
                Err(status) => return status,
            };
            match parse_json(text, "paths_json") {
                Ok(paths) => paths,
                Err(status) => return status,
            }
        };
        let probe = Probe::new(signature, now).with_paths(paths);
        let hits = pdm.inner.query(&probe, limit);
        let rows: Vec<serde_json::Value> = hits
            .iter()
            .map(|(record, score)| serde_json::json!({"record": record, "score": score}))
            .collect();
        give_string(out_json, serde_json::Value::Array(rows).to_string())
    })
}

/// Apply the retention policy as of `now`. On success `*out_json` holds the
/// eviction report and belongs to the caller.
///
/// # Safety
/// `pdm` must be a live handle from this library (and not aliased by a
/// concurrent call) and `out_json` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_gc_json(
    pdm: *mut DgPdm,
    now: i64,
    out_json: *mut *mut c_char,
) -> DgStatus {
    guarded(|| {
        if pdm.is_null() || out_json.is_null() {
            return usage("pdm and out_json must not be null");
        }
        // SAFETY: live, unaliased handle per the contract.
        let pdm = unsafe { &mut *pdm };
        match pdm.inner.apply_retention(now) {
            Ok(report) => match serde_json::to_string(&report) {
                Ok(text) => give_string(out_json, text),
                Err(err) => fail(&Error::Json(err)),
            },
            Err(err) => fail(&err),
        }
    })
}

/// Release a store handle. Null is a no-op. Pending state is already on
/// disk; there is nothing to flush.
///
/// # Safety
/// `pdm` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dg_pdm_free(pdm: *mut DgPdm) {
    if !pdm.is_null() {
        // SAFETY: ownership is returned to Rust exactly once per the contract.
        drop(unsafe { Box::from_raw(pdm) });
    }
}
