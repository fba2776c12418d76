//! Synthetic scenario generation with planted ground truth.
//!
//! Each scenario plants a gold chain of `hops` files linked by `Import`
//! edges: the chain head is lexically close to the bug description (the
//! natural seed), inner links are only faintly similar, and the defect
//! marker sits in the last link — retrieval has to walk the chain to find
//! it. Around the chain, `noise_ratio` of the files are *more* lexically
//! similar than the inner chain but hang off documentation edges only, so
//! structure-blind ranking prefers them while graph-guided expansion never
//! admits them. Commit nodes scatter timestamps across the task's temporal
//! range. Everything derives from one seed; identical seeds yield
//! byte-identical scenarios.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fixloop::{BugReport, FixEdit, FixProposal, TestSuites};
use crate::graph::{CodeGraph, EdgeKind, GraphManifest, ManifestEdge, ManifestNode, NodeKind};

use super::MrrTask;

// ── parameters ─────────────────────────────────────────────────────────────

/// Words per generated node text.
const NODE_WORDS: usize = 12;
/// Query terms sampled into the chain head (the planted seed).
const SEED_QUERY_TERMS: usize = 7;
/// Query terms sampled into inner chain links.
const GOLD_QUERY_TERMS: usize = 3;
/// Query terms sampled into noise files: the concrete reading of
/// "plausible but irrelevant" — a 0.3 mix rate.
const NOISE_QUERY_TERMS: usize = 4;
/// Distinct terms in the generated bug description.
const QUERY_TERMS: usize = 12;

/// Marker planted in the defective file; the gold patch flips it.
pub const DEFECT_MARKER: &str = "STATE = broken";
/// Replacement the gold patch writes.
pub const FIXED_MARKER: &str = "STATE = fixed";
/// Relative path of the generated state check script.
pub const CHECK_SCRIPT: &str = "tests/check_state.sh";

const VOCAB: [&str; 96] = [
    "payment", "refund", "ledger", "cache", "retry", "token", "session", "parser", "stream",
    "buffer", "index", "shard", "replica", "quorum", "socket", "handshake", "timeout", "backoff",
    "cursor", "batch", "queue", "worker", "scheduler", "mutex", "atomic", "channel", "router",
    "gateway", "proxy", "balancer", "metric", "tracer", "logger", "audit", "config", "secret",
    "vault", "cipher", "digest", "checksum", "manifest", "bundle", "artifact", "registry",
    "snapshot", "journal", "compact", "merge", "split", "rebase", "commit", "branch", "tag",
    "release", "deploy", "rollback", "probe", "health", "liveness", "readiness", "throttle",
    "quota", "limit", "burst", "window", "bucket", "lease", "lock", "fence", "epoch", "term",
    "vote", "election", "leader", "follower", "gossip", "sync", "drift", "skew", "clock",
    "offset", "segment", "record", "header", "footer", "payload", "frame", "packet", "codec",
    "schema", "column", "row", "table", "view", "planner", "optimizer",
];

/// Generation knobs. Files span 10–50, hops 3–7, and the gold chain must
/// fit in the files left over after the noise share is taken out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Retrievable file count (gold + noise + background).
    pub files: usize,
    /// Fraction of files that are lexical decoys, rounded to a count.
    pub noise_ratio: f64,
    /// Gold chain length in nodes; the defect sits `hops - 1` edges deep.
    pub hops: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            files: 10,
            noise_ratio: 0.7,
            hops: 3,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::Infeasible(reason));
        if !(10..=50).contains(&self.files) {
            return fail(format!("files must lie in 10..=50, got {}", self.files));
        }
        if !(3..=7).contains(&self.hops) {
            return fail(format!("hops must lie in 3..=7, got {}", self.hops));
        }
        if !self.noise_ratio.is_finite() || !(0.0..1.0).contains(&self.noise_ratio) {
            return fail(format!(
                "noise_ratio must lie in [0, 1), got {}",
                self.noise_ratio
            ));
        }
        let capacity = self.files - self.noise_count();
        if self.hops > capacity {
            return fail(format!(
                "a {}-hop gold chain does not fit: {} files minus {} noise leaves {}",
                self.hops,
                self.files,
                self.noise_count(),
                capacity
            ));
        }
        Ok(())
    }

    fn noise_count(&self) -> usize {
        (self.noise_ratio * self.files as f64).round() as usize
    }

    /// Draw a feasible `(hops, files)` pair at the canonical 0.7 noise
    /// ratio — the sampler the benchmark harness uses.
    pub fn sample(rng: &mut impl Rng) -> ScenarioParams {
        let hops = rng.random_range(3..=7);
        let min_files = (10..=50)
            .find(|&files| {
                let noise = (0.7 * files as f64).round() as usize;
                files - noise >= hops
            })
            .expect("50 files always fit a 7-hop chain");
        ScenarioParams {
            files: rng.random_range(min_files..=50),
            noise_ratio: 0.7,
            hops,
        }
    }
}

// ── scenario ───────────────────────────────────────────────────────────────

/// A generated benchmark artifact: the graph wire form, the scored task,
/// the known-good patch, and the test definitions that detect the defect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub manifest: GraphManifest,
    pub task: MrrTask,
    pub gold_patch: FixProposal,
    pub tests: TestSuites,
}

impl Scenario {
    /// Build the in-memory graph from the embedded manifest.
    pub fn build_graph(&self) -> Result<CodeGraph> {
        self.manifest.build()
    }

    /// The bug description the task was generated from.
    pub fn bug_description(&self) -> &str {
        self.task
            .evaluation
            .get("bug_description")
            .and_then(Value::as_str)
            .unwrap_or_default()
    }

    /// The bug report a fix-loop session on this scenario starts from.
    pub fn bug_report(&self) -> BugReport {
        let mut bug = BugReport::new(
            self.task.bug_id.clone(),
            "planted defect at the end of an import chain",
            self.bug_description(),
            self.task.temporal_range.0,
        );
        for test in &self.task.failing_tests {
            bug = bug.with_failing_test(test.clone());
        }
        bug
    }

    /// Write a runnable workspace: every file node's text as content, the
    /// defect marker in the faulty file, and the state check script.
    pub fn materialize(&self, root: &Path) -> Result<()> {
        let defect_path = &self.gold_patch.edits[0].path;
        for node in &self.manifest.nodes {
            if node.kind != NodeKind::File {
                continue;
            }
            let full = root.join(&node.path);
            if let Some(parent) = full.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut content = format!("{}\n", node.text);
            if &node.path == defect_path {
                content.push_str(DEFECT_MARKER);
                content.push('\n');
            }
            std::fs::write(full, content)?;
        }
        let script = root.join(CHECK_SCRIPT);
        if let Some(parent) = script.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(
            script,
            format!(
                "#!/bin/sh\ngrep -q '{FIXED_MARKER}' {defect_path} && exit 0\n\
                 echo \"state marker still broken in {defect_path}\"\nexit 1\n"
            ),
        )?;
        Ok(())
    }
}

// ── generation ─────────────────────────────────────────────────────────────

/// Generate one scenario. Identical `(seed, params)` inputs produce
/// byte-identical scenarios; infeasible parameters are rejected.
pub fn generate_scenario(seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let query_terms: Vec<&str> = VOCAB
        .choose_multiple(&mut rng, QUERY_TERMS)
        .copied()
        .collect();
    let filler_pool: Vec<&str> = VOCAB
        .iter()
        .copied()
        .filter(|w| !query_terms.contains(w))
        .collect();
    let description = query_terms.join(" ");

    let noise_count = params.noise_count();
    let gold_count = params.hops;
    let background_count = params.files - noise_count - gold_count;

    let mut node_text = |query_share: usize| -> String {
        let mut words: Vec<&str> = query_terms
            .choose_multiple(&mut rng, query_share)
            .copied()
            .chain(
                filler_pool
                    .choose_multiple(&mut rng, NODE_WORDS - query_share)
                    .copied(),
            )
            .collect();
        words.shuffle(&mut rng);
        words.join(" ")
    };

    let mut nodes = Vec::new();
    let mut edges = Vec::new();

    // Gold chain: head is the planted seed, inner links faintly similar.
    let gold_paths: Vec<String> = (0..gold_count)
        .map(|i| format!("src/chain/step{i:02}.rs"))
        .collect();
    for (i, path) in gold_paths.iter().enumerate() {
        let share = if i == 0 { SEED_QUERY_TERMS } else { GOLD_QUERY_TERMS };
        nodes.push(file_node(path, node_text(share)));
    }
    for pair in gold_paths.windows(2) {
        edges.push(edge(&file_id(&pair[0]), &file_id(&pair[1]), EdgeKind::Import));
    }

    // Documentation hub and a pull request: the only routes to the decoys.
    let hub_id = "doc:design-notes";
    nodes.push(ManifestNode {
        id: hub_id.to_string(),
        kind: NodeKind::DocChunk,
        name: "design-notes".to_string(),
        path: "docs/design.md".to_string(),
        span: None,
        timestamp: 0,
        text: String::new(),
    });
    let pr_id = "pr:42";
    nodes.push(ManifestNode {
        id: pr_id.to_string(),
        kind: NodeKind::PullRequest,
        name: "pr-42".to_string(),
        path: String::new(),
        span: None,
        timestamp: 0,
        text: String::new(),
    });
    edges.push(edge(&file_id(&gold_paths[0]), hub_id, EdgeKind::DocRef));
    edges.push(edge(hub_id, pr_id, EdgeKind::DocRef));

    // Noise files: stronger lexical pull than inner gold, doc-attached only.
    let noise_paths: Vec<String> = (0..noise_count)
        .map(|j| format!("src/noise/n{j:02}.rs"))
        .collect();
    for (j, path) in noise_paths.iter().enumerate() {
        nodes.push(file_node(path, node_text(NOISE_QUERY_TERMS)));
        let (src, kind) = if j % 2 == 0 {
            (hub_id, EdgeKind::DocRef)
        } else {
            (pr_id, EdgeKind::PrComment)
        };
        edges.push(edge(src, &file_id(path), kind));
    }

    // Background files: no lexical overlap at all.
    let background_paths: Vec<String> = (0..background_count)
        .map(|m| format!("src/extra/x{m:02}.rs"))
        .collect();
    for path in &background_paths {
        nodes.push(file_node(path, node_text(0)));
        edges.push(edge(hub_id, &file_id(path), EdgeKind::DocRef));
    }

    // Temporal scattering: one commit per gold link, spread over the range.
    let start = rng.random_range(1_672_531_200..1_704_067_200); // within 2023
    let end = start + 86_400 * rng.random_range(90..=365); // 3-12 months
    for (i, path) in gold_paths.iter().enumerate() {
        nodes.push(ManifestNode {
            id: format!("commit:c{i:02}"),
            kind: NodeKind::Commit,
            name: format!("touch {path}"),
            path: String::new(),
            span: None,
            timestamp: rng.random_range(start..=end),
            text: String::new(),
        });
    }

    let mut scattered_files: Vec<String> = gold_paths
        .iter()
        .chain(&noise_paths)
        .chain(&background_paths)
        .cloned()
        .collect();
    scattered_files.shuffle(&mut rng);

    let mut evaluation = Map::new();
    evaluation.insert("bug_description".to_string(), json!(description));
    evaluation.insert("chain_depth".to_string(), json!(params.hops));
    evaluation.insert("context_scorer".to_string(), json!("tf_cosine"));

    let task = MrrTask {
        bug_id: format!("synthetic-{seed:016x}"),
        repo_snapshot: format!("synthetic://scenario/{seed:016x}"),
        failing_tests: vec![CHECK_SCRIPT.to_string()],
        scattered_files,
        gold_chunks: gold_paths.iter().map(|p| file_id(p).into()).collect(),
        temporal_range: (start, end),
        evaluation,
    };
    task.validate()?;

    let defect_path = gold_paths.last().expect("hops >= 3").clone();
    let gold_patch = FixProposal {
        edits: vec![FixEdit {
            path: defect_path,
            original: DEFECT_MARKER.to_string(),
            replacement: FIXED_MARKER.to_string(),
        }],
        rationale: "flip the planted defect marker at the end of the import chain".to_string(),
        proposer_confidence: 1.0,
    };

    Ok(Scenario {
        manifest: GraphManifest { nodes, edges },
        task,
        gold_patch,
        tests: TestSuites::new([CHECK_SCRIPT]),
    })
}

fn file_id(path: &str) -> String {
    format!("file:{path}")
}

fn file_node(path: &str, text: String) -> ManifestNode {
    let name = path.rsplit('/').next().unwrap_or(path).to_string();
    ManifestNode {
        id: file_id(path),
        kind: NodeKind::File,
        name,
        path: path.to_string(),
        span: None,
        timestamp: 0,
        text,
    }
}

fn edge(src: &str, dst: &str, kind: EdgeKind) -> ManifestEdge {
    ManifestEdge {
        src: src.to_string(),
        dst: dst.to_string(),
        kind,
        timestamp: 0,
        annotation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::k_hop_neighbors;
    use std::collections::BTreeSet;

    #[test]
    fn identical_seeds_generate_byte_identical_scenarios() {
        let params = ScenarioParams {
            files: 20,
            noise_ratio: 0.7,
            hops: 4,
        };
        let a = generate_scenario(99, &params).unwrap();
        let b = generate_scenario(99, &params).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_scenario(100, &params).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn counting_oracle_ten_files_three_hops() {
        let scenario = generate_scenario(7, &ScenarioParams::default()).unwrap();
        let gold: BTreeSet<&str> = scenario
            .task
            .gold_chunks
            .iter()
            .map(|id| id.0.as_str())
            .collect();
        assert_eq!(gold.len(), 3, "chain length equals hops");

        let files: Vec<&ManifestNode> = scenario
            .manifest
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::File)
            .collect();
        assert_eq!(files.len(), 10);
        let noise = files
            .iter()
            .filter(|n| !gold.contains(n.id.as_str()))
            .count();
        assert_eq!(noise, 7, "exactly 7 noise files per 3 gold");

        let chain_edges = scenario
            .manifest
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Import)
            .count();
        assert_eq!(chain_edges, 2, "three links need two imports");
        assert_eq!(scenario.task.scattered_files.len(), 10);

        let commits = scenario
            .manifest
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Commit)
            .count();
        assert_eq!(commits, 3, "one commit per gold link");
    }

    #[test]
    fn infeasible_parameters_are_rejected() {
        let cases = [
            ScenarioParams { files: 10, noise_ratio: 0.7, hops: 12 },
            ScenarioParams { files: 9, noise_ratio: 0.7, hops: 3 },
            ScenarioParams { files: 51, noise_ratio: 0.7, hops: 3 },
            ScenarioParams { files: 10, noise_ratio: 0.7, hops: 2 },
            // 10 files at 0.7 noise leave room for only a 3-link chain.
            ScenarioParams { files: 10, noise_ratio: 0.7, hops: 4 },
            ScenarioParams { files: 10, noise_ratio: 1.0, hops: 3 },
        ];
        for params in cases {
            assert!(
                matches!(generate_scenario(1, &params), Err(Error::Infeasible(_))),
                "expected rejection for {params:?}"
            );
        }
    }

    #[test]
    fn sampled_parameters_are_always_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let params = ScenarioParams::sample(&mut rng);
            params.validate().unwrap();
        }
    }

    #[test]
    fn gold_chain_is_reachable_from_the_seed_within_hops() {
        let params = ScenarioParams {
            files: 24,
            noise_ratio: 0.7,
            hops: 7,
        };
        let scenario = generate_scenario(11, &params).unwrap();
        let graph = scenario.build_graph().unwrap();
        let seeds: BTreeSet<_> = [scenario.task.gold_chunks[0].clone()].into();
        let mut reachable = k_hop_neighbors(&graph, &seeds, params.hops).unwrap();
        reachable.extend(seeds);
        for gold in &scenario.task.gold_chunks {
            assert!(reachable.contains(gold), "{gold:?} beyond {} hops", params.hops);
        }
    }

    #[test]
    fn temporal_range_spans_three_to_twelve_months_and_holds_the_commits() {
        let scenario = generate_scenario(3, &ScenarioParams::default()).unwrap();
        let (start, end) = scenario.task.temporal_range;
        let span_days = (end - start) / 86_400;
        assert!((90..=365).contains(&span_days), "span {span_days} days");
        for node in &scenario.manifest.nodes {
            if node.kind == NodeKind::Commit {
                assert!((start..=end).contains(&node.timestamp));
            }
        }
    }

    #[test]
    fn materialized_workspace_fails_until_the_gold_patch_lands() {
        use crate::fixloop::{apply_proposal, CommandSandbox, Sandbox};

        let scenario = generate_scenario(21, &ScenarioParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        scenario.materialize(dir.path()).unwrap();

        let sandbox = CommandSandbox::new("sh", ["{test}"]);
        let before = sandbox
            .run_tests(dir.path(), &scenario.tests.target)
            .unwrap();
        assert!(!before.success, "defect marker must trip the check");
        assert!(before.failure_text.contains("still broken"));

        apply_proposal(dir.path(), &scenario.gold_patch).unwrap();
        let after = sandbox
            .run_tests(dir.path(), &scenario.tests.target)
            .unwrap();
        assert!(after.success, "gold patch heals the workspace");
    }
}
