//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]. Variants are
//! grouped by the subsystem that raises them so callers (and the C ABI layer)
//! can map them to coarse categories without string matching.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ── graph ────────────────────────────────────────────────────────────
    #[error("node `{0}` not found in graph")]
    NodeNotFound(String),

    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),

    #[error("duplicate edge {src} -[{kind}]-> {dst}")]
    DuplicateEdge {
        src: String,
        dst: String,
        kind: String,
    },

    #[error("edge references missing node `{missing}` ({src} -[{kind}]-> {dst})")]
    DanglingEdge {
        src: String,
        dst: String,
        kind: String,
        missing: String,
    },

    #[error("invalid node `{id}`: {reason}")]
    InvalidNode { id: String, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("edge timestamp {edge_ts} is after the evaluation clock {now}")]
    ClockSkew { edge_ts: i64, now: i64 },

    // ── retrieval ────────────────────────────────────────────────────────
    #[error("graph is empty")]
    EmptyGraph,

    #[error("query must carry text, seed hints, or stack frames")]
    EmptyQuery,

    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),

    #[error("k must be at least 1 for neighborhood expansion")]
    ZeroHops,

    // ── persistent debug memory ──────────────────────────────────────────
    #[error("pattern id `{0}` already stored")]
    DuplicatePattern(String),

    #[error("pattern id `{0}` not found")]
    PatternNotFound(String),

    #[error("invalid pattern `{id}`: {reason}")]
    InvalidPattern { id: String, reason: String },

    #[error("reuse at {attempted} would move pattern `{id}` backwards in time (last used {last_used})")]
    TimeRegression {
        id: String,
        attempted: i64,
        last_used: i64,
    },

    // ── fix loop ─────────────────────────────────────────────────────────
    #[error("bug report must carry failing tests or stack frames")]
    EmptyBugReport,

    #[error("invalid fix proposal: {0}")]
    InvalidProposal(String),

    #[error("sandbox failed running `{test}`: {reason}")]
    Sandbox { test: String, reason: String },

    #[error("cannot extract failure details from a passing outcome")]
    OutcomePassed,

    // ── evaluation ───────────────────────────────────────────────────────
    #[error("task `{task}`: {reason}")]
    Task { task: String, reason: String },

    #[error("infeasible scenario parameters: {0}")]
    Infeasible(String),

    #[error("no tasks to evaluate")]
    NoTasks,

    // ── plumbing ─────────────────────────────────────────────────────────
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse category used by the C ABI and the CLI exit-code mapping.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            Io(_) => ErrorCategory::Io,
            Json(_) | Manifest(_) => ErrorCategory::Parse,
            NodeNotFound(_) | DuplicateNode(_) | DuplicateEdge { .. } | DanglingEdge { .. }
            | InvalidNode { .. } | ClockSkew { .. } | EmptyGraph => ErrorCategory::Graph,
            EmptyQuery | InvalidConfig(_) | ZeroHops => ErrorCategory::Usage,
            DuplicatePattern(_) | PatternNotFound(_) | InvalidPattern { .. }
            | TimeRegression { .. } => ErrorCategory::Memory,
            EmptyBugReport | InvalidProposal(_) | Sandbox { .. } | OutcomePassed => {
                ErrorCategory::FixLoop
            }
            Task { .. } | Infeasible(_) | NoTasks => ErrorCategory::Eval,
        }
    }

    /// Whether retrying the same operation can plausibly succeed. Only
    /// transient I/O failures qualify; domain errors are deterministic.
    pub fn is_retryable(&self) -> bool {
        use std::io::ErrorKind::*;
        match self {
            Error::Io(e) => matches!(e.kind(), Interrupted | WouldBlock | TimedOut),
            _ => false,
        }
    }
}

/// Stable error buckets exposed across the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ErrorCategory {
    Io = 1,
    Parse = 2,
    Graph = 3,
    Usage = 4,
    Memory = 5,
    FixLoop = 6,
    Eval = 7,
}
