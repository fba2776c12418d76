//! Persistent debug memory.
//!
//! A durable store of debugging patterns: what broke, where, and how it was
//! fixed. Retrieval ranks records by a hybrid score —
//! `0.4·semantic + 0.3·temporal + 0.2·structural + 0.1·pattern` — where
//! semantic is the lexical similarity of the stored signature to the probe,
//! temporal decays as `e^(−0.1·Δdays)` from the record's last use,
//! structural is the Jaccard overlap of touched paths, and pattern is the
//! fraction of the record's error tokens present in the probe. Candidates
//! enter the ranking only past a gate (semantic ≥ 0.75 or pattern ≥ 0.5),
//! so paraphrased prose and exact error signatures both retrieve.
//!
//! Records carry a lifecycle status driving retention: resolved fixes are
//! permanent, active bugs linger 90 days past resolution, test results and
//! embeddings roll off after 180 and 30 days, and code versions keep the
//! newest 1000 commits up to two years.

mod store;

pub use store::{EvictionReport, PdmStore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{similarity, tokenize};

// ── scoring constants ──────────────────────────────────────────────────────

pub const SEMANTIC_WEIGHT: f64 = 0.4;
pub const TEMPORAL_WEIGHT: f64 = 0.3;
pub const STRUCTURAL_WEIGHT: f64 = 0.2;
pub const PATTERN_WEIGHT: f64 = 0.1;
/// Decay rate per day applied to the time since a record was last used.
pub const TEMPORAL_DECAY_RATE: f64 = 0.1;
/// Semantic similarity at or above which a record is a retrieval candidate.
pub const SEMANTIC_GATE: f64 = 0.75;
/// Error-token overlap at or above which a record is a candidate even when
/// the prose similarity falls short.
pub const PATTERN_GATE: f64 = 0.5;

const SECONDS_PER_DAY: f64 = 86_400.0;

// ── domain types ───────────────────────────────────────────────────────────

/// Lifecycle category of a stored record; drives the retention policy.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum PatternStatus {
    ActiveBug,
    ResolvedFix,
    TestResult,
    Embedding,
    CodeVersion,
}

/// One remembered debugging episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugPattern {
    pub id: String,
    /// Short error-signature text, e.g. "redis timestamp precision mismatch".
    pub pattern: String,
    /// Normalized tokens of the signature (defaults to tokenizing `pattern`).
    #[serde(default)]
    pub error_tokens: Vec<String>,
    /// Repository-relative paths involved in the episode.
    #[serde(default, alias = "context")]
    pub context_paths: Vec<String>,
    /// How the bug was fixed (free text, or a serialized proposal).
    #[serde(default)]
    pub fix: String,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Confidence in the stored fix, in [0, 1].
    pub confidence: f64,
    #[serde(default, alias = "reuseCount")]
    pub reuse_count: u64,
    pub created_at: i64,
    pub last_used: i64,
    pub status: PatternStatus,
    /// When an ActiveBug was resolved; starts the 90-day retention grace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_at: Option<i64>,
}

impl DebugPattern {
    /// A fresh record with `error_tokens` derived from the signature and
    /// `last_used` anchored at creation.
    pub fn new(
        id: impl Into<String>,
        pattern: impl Into<String>,
        status: PatternStatus,
        created_at: i64,
    ) -> Self {
        let pattern = pattern.into();
        DebugPattern {
            id: id.into(),
            error_tokens: tokenize(&pattern),
            pattern,
            context_paths: Vec::new(),
            fix: String::new(),
            tags: Vec::new(),
            confidence: 1.0,
            reuse_count: 0,
            created_at,
            last_used: created_at,
            status,
            resolved_at: None,
        }
    }

    pub fn with_paths<I, S>(mut self, paths: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.context_paths = paths.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_fix(mut self, fix: impl Into<String>) -> Self {
        self.fix = fix.into();
        self
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_tokens<I, S>(mut self, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.error_tokens = tokens.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn with_last_used(mut self, last_used: i64) -> Self {
        self.last_used = last_used;
        self
    }

    /// Mark an active bug as resolved at `at`.
    pub fn resolved(mut self, at: i64) -> Self {
        self.resolved_at = Some(at);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidPattern {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return fail("id must be non-empty");
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return fail("confidence must lie in [0, 1]");
        }
        if self.last_used < self.created_at {
            return fail("last_used must not precede created_at");
        }
        Ok(())
    }
}

/// What a caller is looking for: a failure signature, the paths it touches,
/// and the query time (for temporal decay).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Probe {
    pub signature: String,
    #[serde(default)]
    pub paths: Vec<String>,
    pub now: i64,
}

impl Probe {
    pub fn new(signature: impl Into<String>, now: i64) -> Self {
        Probe {
            signature: signature.into(),
            paths: Vec::new(),
            now,
        }
    }

    pub fn with_paths<I, S>(mut self, paths: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.paths = paths.into_iter().map(Into::into).collect();
        self
    }
}

/// Component breakdown of one record-probe match. `total` is always the
/// weighted sum of the four components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmScore {
    pub semantic: f64,
    pub temporal: f64,
    pub structural: f64,
    pub pattern: f64,
    pub total: f64,
}

/// Category retention windows; the defaults are the contract values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetentionPolicy {
    /// Days an ActiveBug survives past its resolution.
    pub active_bug_grace_days: i64,
    /// Rolling window for TestResult records.
    pub test_result_days: i64,
    /// Rolling window for Embedding records.
    pub embedding_cache_days: i64,
    /// CodeVersion records beyond this many newest commits are evicted.
    pub code_version_limit: usize,
    /// CodeVersion records older than this are evicted regardless of rank.
    pub code_version_days: i64,
}

impl Default for RetentionPolicy {
    fn default() -> Self {
        RetentionPolicy {
            active_bug_grace_days: 90,
            test_result_days: 180,
            embedding_cache_days: 30,
            code_version_limit: 1000,
            code_version_days: 730,
        }
    }
}

impl RetentionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.active_bug_grace_days <= 0
            || self.test_result_days <= 0
            || self.embedding_cache_days <= 0
            || self.code_version_limit == 0
            || self.code_version_days <= 0
        {
            return Err(Error::InvalidConfig(
                "retention windows must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

// ── hybrid scoring ─────────────────────────────────────────────────────────

/// Score one record against a probe. Components are each in [0, 1]:
///
/// - `semantic`: term-frequency cosine of signature texts,
/// - `temporal`: `e^(−0.1·Δdays)` with Δdays measured from `last_used`
///   (clamped at zero, so a record used "in the future" scores 1),
/// - `structural`: Jaccard overlap of context paths (both empty counts as a
///   perfect overlap — neither side claims any location),
/// - `pattern`: fraction of the record's error tokens present in the probe
///   (no tokens means nothing to match, scored 0).
pub fn hybrid_score(record: &DebugPattern, probe: &Probe) -> PdmScore {
    let semantic = similarity(&record.pattern, &probe.signature, None);

    let delta_days =
        ((probe.now - record.last_used) as f64 / SECONDS_PER_DAY).max(0.0);
    let temporal = (-TEMPORAL_DECAY_RATE * delta_days).exp();

    let structural = jaccard(&record.context_paths, &probe.paths);

    let probe_tokens: std::collections::BTreeSet<String> =
        tokenize(&probe.signature).into_iter().collect();
    let pattern = if record.error_tokens.is_empty() {
        0.0
    } else {
        let hits = record
            .error_tokens
            .iter()
            .filter(|t| probe_tokens.contains(*t))
            .count();
        hits as f64 / record.error_tokens.len() as f64
    };

    let total = SEMANTIC_WEIGHT * semantic
        + TEMPORAL_WEIGHT * temporal
        + STRUCTURAL_WEIGHT * structural
        + PATTERN_WEIGHT * pattern;
    PdmScore {
        semantic,
        temporal,
        structural,
        pattern,
        total,
    }
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: std::collections::BTreeSet<&String> = a.iter().collect();
    let b: std::collections::BTreeSet<&String> = b.iter().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let intersection = a.intersection(&b).count();
    let union = a.union(&b).count();
    intersection as f64 / union as f64
}
