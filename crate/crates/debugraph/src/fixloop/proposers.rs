//! Patch proposers.
//!
//! The session loop is proposer-agnostic: anything that can turn (bug,
//! retrieved context, memory hits) into a [`FixProposal`] plugs in. The
//! built-ins are deterministic — a fixed gold patch, a scripted sequence,
//! and a memory-replay wrapper that re-applies a previously validated fix
//! when the debug memory recognizes the failure.

use super::{BugReport, FixProposal};
use crate::error::Result;
use crate::pdm::{DebugPattern, PdmScore};
use crate::retrieval::RetrievedContext;

/// Strategy interface for producing fix candidates.
pub trait PatchProposer {
    /// Propose a fix for `bug` given the retrieved context and the ranked
    /// debug-memory hits for this iteration. Called once per iteration;
    /// implementations may keep state across calls.
    fn propose(
        &mut self,
        bug: &BugReport,
        context: &RetrievedContext,
        memory_hits: &[(DebugPattern, PdmScore)],
    ) -> Result<FixProposal>;
}

/// Always proposes the same patch. The "oracle" double: with the correct
/// patch it validates on iteration one, with a wrong one it exhausts the
/// iteration budget.
#[derive(Debug, Clone)]
pub struct GoldPatchProposer {
    proposal: FixProposal,
}

impl GoldPatchProposer {
    pub fn new(proposal: FixProposal) -> Self {
        GoldPatchProposer { proposal }
    }
}

impl PatchProposer for GoldPatchProposer {
    fn propose(
        &mut self,
        _bug: &BugReport,
        _context: &RetrievedContext,
        _memory_hits: &[(DebugPattern, PdmScore)],
    ) -> Result<FixProposal> {
        Ok(self.proposal.clone())
    }
}

/// Plays a fixed sequence of proposals, then repeats the last one. Models a
/// proposer that refines its hypothesis over iterations.
#[derive(Debug, Clone)]
pub struct ScriptedProposer {
    proposals: Vec<FixProposal>,
    cursor: usize,
}

impl ScriptedProposer {
    /// `proposals` must be non-empty.
    pub fn new(proposals: Vec<FixProposal>) -> Self {
        assert!(!proposals.is_empty(), "scripted proposer needs at least one proposal");
        ScriptedProposer {
            proposals,
            cursor: 0,
        }
    }

    /// How many scripted entries have been consumed.
    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl PatchProposer for ScriptedProposer {
    fn propose(
        &mut self,
        _bug: &BugReport,
        _context: &RetrievedContext,
        _memory_hits: &[(DebugPattern, PdmScore)],
    ) -> Result<FixProposal> {
        let idx = self.cursor.min(self.proposals.len() - 1);
        self.cursor += 1;
        Ok(self.proposals[idx].clone())
    }
}

/// Replays remembered fixes: when the top memory hit clears the replay
/// threshold and its stored fix deserializes into a proposal, that proposal
/// is returned; otherwise the wrapped proposer runs. This is what turns a
/// previously solved bug into a one-iteration session.
#[derive(Debug, Clone)]
pub struct PdmReplayProposer<P> {
    inner: P,
    threshold: f64,
}

/// Total-score threshold above which a memory hit is replayed directly.
pub const REPLAY_THRESHOLD: f64 = 0.75;

impl<P: PatchProposer> PdmReplayProposer<P> {
    pub fn new(inner: P) -> Self {
        PdmReplayProposer {
            inner,
            threshold: REPLAY_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

impl<P: PatchProposer> PatchProposer for PdmReplayProposer<P> {
    fn propose(
        &mut self,
        bug: &BugReport,
        context: &RetrievedContext,
        memory_hits: &[(DebugPattern, PdmScore)],
    ) -> Result<FixProposal> {
        if let Some((record, score)) = memory_hits.first() {
            if score.total >= self.threshold {
                if let Ok(proposal) = serde_json::from_str::<FixProposal>(&record.fix) {
                    if proposal.validate().is_ok() {
                        return Ok(proposal);
                    }
                }
            }
        }
        self.inner.propose(bug, context, memory_hits)
    }
}
