//! Autonomous fix-test-refine loop.
//!
//! One session takes a bug report and drives: retrieve context from the
//! graph → query the debug memory → propose a patch → apply it to a fresh
//! scratch copy of the workspace → run the target tests → on success run
//! the extended suite as a regression gate → on a clean pass, remember the
//! fix and return `Validated`. Any failure enriches the next iteration's
//! query with tokens and paths extracted from the diagnostics, and the
//! loop repeats up to `max_iterations` (default 10) before returning
//! `FailedToConverge`.
//!
//! The caller's workspace is never mutated: every iteration patches its own
//! pristine copy, so a validated proposal is exactly "apply these edits to
//! the original tree and the suites pass".

mod proposers;
mod sandbox;

pub use proposers::{
    GoldPatchProposer, PatchProposer, PdmReplayProposer, ScriptedProposer, REPLAY_THRESHOLD,
};
pub use sandbox::{CommandSandbox, Sandbox, TestOutcome, TestStatus, DEFAULT_TEST_TIMEOUT};

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CodeGraph;
use crate::pdm::{DebugPattern, PatternStatus, PdmStore, Probe};
use crate::retrieval::{retrieve, Query, RetrievalConfig, RetrievedContext};
use crate::text::tokenize;

/// Memory hits handed to the proposer each iteration.
const MEMORY_HITS: usize = 5;

// ── domain types ───────────────────────────────────────────────────────────

/// What is known about the bug before debugging starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub title: String,
    pub description: String,
    /// Test identifiers currently failing.
    #[serde(default)]
    pub failing_tests: Vec<String>,
    /// `(path, line)` frames, innermost first.
    #[serde(default)]
    pub stack_frames: Vec<(String, u32)>,
    pub reported_at: i64,
}

impl BugReport {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        description: impl Into<String>,
        reported_at: i64,
    ) -> Self {
        BugReport {
            id: id.into(),
            title: title.into(),
            description: description.into(),
            failing_tests: Vec::new(),
            stack_frames: Vec::new(),
            reported_at,
        }
    }

    pub fn with_failing_test(mut self, test: impl Into<String>) -> Self {
        self.failing_tests.push(test.into());
        self
    }

    pub fn with_frame(mut self, path: impl Into<String>, line: u32) -> Self {
        self.stack_frames.push((path.into(), line));
        self
    }

    /// A report must point somewhere: failing tests or stack frames.
    pub fn validate(&self) -> Result<()> {
        if self.failing_tests.is_empty() && self.stack_frames.is_empty() {
            return Err(Error::EmptyBugReport);
        }
        Ok(())
    }
}

/// One search-and-replace edit. `original` must occur in the file at
/// application time; the first occurrence is replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixEdit {
    /// Workspace-relative path.
    pub path: String,
    pub original: String,
    pub replacement: String,
}

/// A candidate fix: excerpt-replacement edits plus the proposer's rationale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixProposal {
    pub edits: Vec<FixEdit>,
    pub rationale: String,
    pub proposer_confidence: f64,
}

impl FixProposal {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| Err(Error::InvalidProposal(reason.to_string()));
        if self.edits.is_empty() {
            return fail("a proposal needs at least one edit");
        }
        if !(0.0..=1.0).contains(&self.proposer_confidence) {
            return fail("proposer_confidence must lie in [0, 1]");
        }
        for edit in &self.edits {
            if edit.path.is_empty() {
                return fail("edit path must be non-empty");
            }
            if edit.original.is_empty() {
                return fail("original excerpt must be non-empty");
            }
        }
        Ok(())
    }
}

/// Failure knowledge accumulated across iterations: diagnostic tokens and
/// implicated paths. Monotone — merging never removes entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    pub tokens: BTreeSet<String>,
    pub paths: BTreeSet<String>,
}

impl Enrichment {
    pub fn merge(&mut self, other: Enrichment) {
        self.tokens.extend(other.tokens);
        self.paths.extend(other.paths);
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.paths.is_empty()
    }
}

/// How one iteration ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IterationOutcome {
    /// Edits applied; the target suite ran to a verdict.
    Tested(TestOutcome),
    /// An edit's original excerpt was absent (or its path invalid); nothing
    /// was executed.
    Unappliable { path: String, detail: String },
}

impl IterationOutcome {
    pub fn tested(&self) -> Option<&TestOutcome> {
        match self {
            IterationOutcome::Tested(outcome) => Some(outcome),
            IterationOutcome::Unappliable { .. } => None,
        }
    }
}

/// Full record of one loop iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub proposal: FixProposal,
    pub outcome: IterationOutcome,
    /// Extended-suite outcome, present only when the target suite passed.
    pub regression: Option<TestOutcome>,
    /// The retrieved context this iteration's proposal saw.
    pub context_snapshot: RetrievedContext,
    /// The cumulative enrichment that informed this iteration's retrieval.
    pub enrichment: Enrichment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Validated,
    FailedToConverge,
}

/// Accumulated wall-clock per phase, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub retrieve_ms: u64,
    pub memory_ms: u64,
    pub propose_ms: u64,
    pub apply_ms: u64,
    pub test_ms: u64,
}

/// The session transcript: every iteration, the final verdict, and timings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixSession {
    pub bug: BugReport,
    pub iterations: Vec<IterationRecord>,
    pub final_status: SessionStatus,
    pub iterations_used: usize,
    pub phase_millis: PhaseTimings,
}

impl FixSession {
    /// The proposal that validated, if the session converged.
    pub fn validated_proposal(&self) -> Option<&FixProposal> {
        match self.final_status {
            SessionStatus::Validated => self.iterations.last().map(|it| &it.proposal),
            SessionStatus::FailedToConverge => None,
        }
    }
}

/// Target suite gates the fix; extended suite gates regressions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TestSuites {
    pub target: Vec<String>,
    pub extended: Vec<String>,
}

impl TestSuites {
    pub fn new<I, S>(target: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TestSuites {
            target: target.into_iter().map(Into::into).collect(),
            extended: Vec::new(),
        }
    }

    pub fn with_extended<I, S>(mut self, extended: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.extended = extended.into_iter().map(Into::into).collect();
        self
    }
}

/// Loop tuning. `now` is the evaluation clock used for retrieval decay and
/// memory timestamps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_iterations: usize,
    pub retrieval: RetrievalConfig,
    pub now: i64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            max_iterations: 10,
            retrieval: RetrievalConfig::default(),
            now: 0,
        }
    }
}

// ── operations ─────────────────────────────────────────────────────────────

/// Distill a failed outcome into query enrichment: distinct diagnostic
/// tokens plus anything path-shaped (contains `/`, or `name.ext` with an
/// alphabetic extension).
pub fn extract_failure(outcome: &TestOutcome) -> Result<Enrichment> {
    if outcome.success {
        return Err(Error::OutcomePassed);
    }
    let tokens: BTreeSet<String> = tokenize(&outcome.failure_text).into_iter().collect();
    let paths: BTreeSet<String> = outcome
        .failure_text
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric() && c != '/' && c != '.' && c != '_' && c != '-'))
        .map(|w| w.trim_end_matches('.'))
        .filter(|w| looks_like_path(w))
        .map(str::to_string)
        .collect();
    Ok(Enrichment { tokens, paths })
}

fn looks_like_path(word: &str) -> bool {
    if word.len() < 3 {
        return false;
    }
    if word.contains('/') {
        return word.trim_matches('/').contains(|c: char| c.is_alphanumeric());
    }
    // name.ext with a short extension containing a letter.
    match word.rsplit_once('.') {
        Some((stem, ext)) => {
            !stem.is_empty()
                && !ext.is_empty()
                && ext.len() <= 5
                && ext.chars().all(|c| c.is_ascii_alphanumeric())
                && ext.chars().any(|c| c.is_ascii_alphabetic())
        }
        None => false,
    }
}

/// Run the extended suite against an already-passing workspace; `true`
/// means no regressions. An empty suite passes vacuously.
pub fn regression_gate(
    sandbox: &dyn Sandbox,
    workspace: &Path,
    extended: &[String],
) -> Result<bool> {
    Ok(sandbox.run_tests(workspace, extended)?.success)
}

/// Apply a proposal's edits in place. Fails atomically per edit: on the
/// first unappliable edit an error is returned (earlier edits in the same
/// call may already be written — apply to a scratch copy, as the session
/// loop does).
pub fn apply_proposal(root: &Path, proposal: &FixProposal) -> Result<()> {
    apply_edits(root, proposal).map_err(|(path, detail)| {
        Error::InvalidProposal(format!("edit to `{path}` is unappliable: {detail}"))
    })
}

fn apply_edits(root: &Path, proposal: &FixProposal) -> std::result::Result<(), (String, String)> {
    for edit in &proposal.edits {
        let rel = Path::new(&edit.path);
        if rel.is_absolute()
            || rel
                .components()
                .any(|c| matches!(c, std::path::Component::ParentDir))
        {
            return Err((edit.path.clone(), "path escapes the workspace".to_string()));
        }
        let full = root.join(rel);
        let content = std::fs::read_to_string(&full)
            .map_err(|e| (edit.path.clone(), format!("cannot read file: {e}")))?;
        if !content.contains(&edit.original) {
            return Err((edit.path.clone(), "original excerpt not found".to_string()));
        }
        let patched = content.replacen(&edit.original, &edit.replacement, 1);
        if let Err(e) = std::fs::write(&full, patched) {
            return Err((edit.path.clone(), format!("cannot write file: {e}")));
        }
    }
    Ok(())
}

fn copy_tree(src: &Path, dst: &Path) -> Result<()> {
    std::fs::create_dir_all(dst)?;
    for entry in walkdir::WalkDir::new(src).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(e.into()))?;
        let rel = entry
            .path()
            .strip_prefix(src)
            .expect("walkdir stays under its root");
        if rel.as_os_str().is_empty() {
            continue;
        }
        let target = dst.join(rel);
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&target)?;
        } else if entry.file_type().is_file() {
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::copy(entry.path(), &target)?;
        }
        // Symlinks are skipped: scratch copies must be self-contained.
    }
    Ok(())
}

/// Drive the fix-test-refine loop for one bug. See the module docs for the
/// control flow; the caller's `workspace` is only ever read.
#[allow(clippy::too_many_arguments)]
pub fn run_session(
    bug: &BugReport,
    graph: &CodeGraph,
    workspace: &Path,
    suites: &TestSuites,
    pdm: &mut PdmStore,
    proposer: &mut dyn PatchProposer,
    sandbox: &dyn Sandbox,
    config: &LoopConfig,
) -> Result<FixSession> {
    bug.validate()?;
    config.retrieval.validate()?;
    if config.max_iterations == 0 {
        return Err(Error::InvalidConfig(
            "max_iterations must be at least 1".to_string(),
        ));
    }

    let scratch_root = tempfile::tempdir()?;
    let base_text = format!("{} {}", bug.title, bug.description);
    let mut enrichment = Enrichment::default();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut timings = PhaseTimings::default();

    for iteration in 1..=config.max_iterations {
        let informed_by = enrichment.clone();

        let t = Instant::now();
        let query = build_query(bug, &base_text, &enrichment);
        let context = retrieve(graph, &query, &config.retrieval, config.now)?;
        timings.retrieve_ms += elapsed_ms(t);

        let t = Instant::now();
        let probe_paths: Vec<String> = bug
            .stack_frames
            .iter()
            .map(|(p, _)| p.clone())
            .chain(enrichment.paths.iter().cloned())
            .collect();
        let probe = Probe::new(base_text.clone(), config.now).with_paths(probe_paths);
        let memory_hits = pdm.query(&probe, MEMORY_HITS);
        timings.memory_ms += elapsed_ms(t);

        let t = Instant::now();
        let proposal = proposer.propose(bug, &context, &memory_hits)?;
        proposal.validate()?;
        timings.propose_ms += elapsed_ms(t);

        let t = Instant::now();
        let scratch = scratch_root.path().join(format!("iter{iteration}"));
        copy_tree(workspace, &scratch)?;
        let applied = apply_edits(&scratch, &proposal);
        timings.apply_ms += elapsed_ms(t);

        if let Err((path, detail)) = applied {
            iterations.push(IterationRecord {
                proposal,
                outcome: IterationOutcome::Unappliable { path, detail },
                regression: None,
                context_snapshot: context,
                enrichment: informed_by,
            });
            continue;
        }

        let t = Instant::now();
        let outcome = sandbox.run_tests(&scratch, &suites.target)?;
        timings.test_ms += elapsed_ms(t);

        if outcome.success {
            let t = Instant::now();
            let regression = sandbox.run_tests(&scratch, &suites.extended)?;
            timings.test_ms += elapsed_ms(t);

            if regression.success {
                remember_fix(pdm, bug, &base_text, &proposal, &context, graph, config.now)?;
                iterations.push(IterationRecord {
                    proposal,
                    outcome: IterationOutcome::Tested(outcome),
                    regression: Some(regression),
                    context_snapshot: context,
                    enrichment: informed_by,
                });
                return Ok(FixSession {
                    bug: bug.clone(),
                    iterations_used: iterations.len(),
                    iterations,
                    final_status: SessionStatus::Validated,
                    phase_millis: timings,
                });
            }
            enrichment.merge(extract_failure(&regression)?);
            iterations.push(IterationRecord {
                proposal,
                outcome: IterationOutcome::Tested(outcome),
                regression: Some(regression),
                context_snapshot: context,
                enrichment: informed_by,
            });
        } else {
            enrichment.merge(extract_failure(&outcome)?);
            iterations.push(IterationRecord {
                proposal,
                outcome: IterationOutcome::Tested(outcome),
                regression: None,
                context_snapshot: context,
                enrichment: informed_by,
            });
        }
    }

    Ok(FixSession {
        bug: bug.clone(),
        iterations_used: iterations.len(),
        iterations,
        final_status: SessionStatus::FailedToConverge,
        phase_millis: timings,
    })
}

fn build_query(bug: &BugReport, base_text: &str, enrichment: &Enrichment) -> Query {
    let text = if enrichment.tokens.is_empty() {
        base_text.to_string()
    } else {
        let extra: Vec<&str> = enrichment.tokens.iter().map(String::as_str).collect();
        format!("{base_text} {}", extra.join(" "))
    };
    let mut query = Query::from_text(text);
    for (path, line) in &bug.stack_frames {
        query = query.with_frame(path.clone(), *line);
    }
    for path in &enrichment.paths {
        query = query.with_hint(path.clone());
    }
    query
}

/// Store the validated fix as a permanent ResolvedFix pattern, so future
/// sessions on a similar failure can replay it.
fn remember_fix(
    pdm: &mut PdmStore,
    bug: &BugReport,
    base_text: &str,
    proposal: &FixProposal,
    context: &RetrievedContext,
    graph: &CodeGraph,
    now: i64,
) -> Result<()> {
    let mut paths: BTreeSet<String> = proposal.edits.iter().map(|e| e.path.clone()).collect();
    for member in &context.members {
        if let Some(node) = graph.node(&member.node) {
            if !node.path.is_empty() {
                paths.insert(node.path.clone());
            }
        }
    }

    let mut id = format!("fix:{}", bug.id);
    let mut n = 1;
    while pdm.get(&id).is_some() {
        n += 1;
        id = format!("fix:{}:{n}", bug.id);
    }

    let record = DebugPattern::new(id, base_text, PatternStatus::ResolvedFix, now)
        .with_paths(paths)
        .with_fix(serde_json::to_string(proposal)?)
        .with_tags(["autofix"])
        .with_confidence(proposal.proposer_confidence);
    pdm.store(record)?;
    Ok(())
}

fn elapsed_ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}
