//! Scenario generation and retrieval-strategy evaluation.
//!
//! The harness scores retrieved contexts against tasks with planted ground
//! truth (`gold_chunks`): Precision@k, Recall@k, reciprocal rank, and
//! context efficiency (gold share of retrieved text, a length proxy for
//! tokens). [`run_comparison`] pits adaptive graph-guided retrieval against
//! a budget-matched flat top-k baseline over a task set and reports both
//! aggregates plus per-metric deltas.

mod generate;

pub use generate::{
    generate_scenario, Scenario, ScenarioParams, CHECK_SCRIPT, DEFECT_MARKER, FIXED_MARKER,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{CodeGraph, NodeId};
use crate::retrieval::{flat_topk_retrieve, retrieve, Query, RetrievalConfig, RetrievedContext};

// ── domain types ───────────────────────────────────────────────────────────

/// One scattered-context debugging task.
///
/// Mirrors the benchmark's JSON task format (snake_case keys, a
/// `"YYYY-MM-DD to YYYY-MM-DD"` temporal range) with one extension: the
/// source format carries no machine-checkable ground truth, so
/// `gold_chunks` names the relevant graph nodes explicitly and scoring is
/// defined against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrrTask {
    pub bug_id: String,
    #[serde(default)]
    pub repo_snapshot: String,
    #[serde(default)]
    pub failing_tests: Vec<String>,
    pub scattered_files: Vec<String>,
    #[serde(default)]
    pub gold_chunks: Vec<NodeId>,
    /// `(start, end)` in seconds since the epoch.
    #[serde(default)]
    pub temporal_range: (i64, i64),
    /// Evaluator options plus any keys this schema does not know.
    #[serde(default)]
    pub evaluation: Map<String, Value>,
}

impl MrrTask {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::Task {
                task: self.bug_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.bug_id.is_empty() {
            return fail("bug_id must be non-empty");
        }
        if self.scattered_files.is_empty() {
            return fail("scattered_files must be non-empty");
        }
        if self.gold_chunks.is_empty() {
            return fail("gold_chunks must be non-empty");
        }
        if self.temporal_range.0 > self.temporal_range.1 {
            return fail("temporal_range start is after its end");
        }
        Ok(())
    }
}

/// Per-task metric row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub bug_id: String,
    pub reciprocal_rank: f64,
    pub precision_at_k: BTreeMap<usize, f64>,
    pub recall_at_k: BTreeMap<usize, f64>,
    pub context_efficiency: f64,
    pub gold_total: usize,
    pub retrieved_total: usize,
}

/// Aggregated metrics over a task set; every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision_at_k: BTreeMap<usize, f64>,
    pub recall_at_k: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub fix_success_rate: f64,
    pub context_efficiency: f64,
    pub per_task: Vec<TaskScore>,
}

impl MetricsReport {
    /// Average task rows into a report. Rows are sorted by `bug_id` first,
    /// so aggregation is independent of input order, bit for bit.
    pub fn aggregate(mut scores: Vec<TaskScore>, fix_success_rate: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::NoTasks);
        }
        scores.sort_by(|a, b| a.bug_id.cmp(&b.bug_id));
        let n = scores.len() as f64;
        let ks: BTreeSet<usize> = scores
            .iter()
            .flat_map(|s| s.precision_at_k.keys().copied())
            .collect();
        let mean_at = |k: usize, field: fn(&TaskScore) -> &BTreeMap<usize, f64>| {
            scores
                .iter()
                .map(|s| field(s).get(&k).copied().unwrap_or(0.0))
                .sum::<f64>()
                / n
        };
        Ok(MetricsReport {
            precision_at_k: ks
                .iter()
                .map(|&k| (k, mean_at(k, |s| &s.precision_at_k)))
                .collect(),
            recall_at_k: ks
                .iter()
                .map(|&k| (k, mean_at(k, |s| &s.recall_at_k)))
                .collect(),
            mrr: scores.iter().map(|s| s.reciprocal_rank).sum::<f64>() / n,
            fix_success_rate,
            context_efficiency: scores.iter().map(|s| s.context_efficiency).sum::<f64>() / n,
            per_task: scores,
        })
    }

    /// Per-task rows as a CSV table (header + one line per task).
    pub fn per_task_csv(&self) -> String {
        let ks: BTreeSet<usize> = self
            .per_task
            .iter()
            .flat_map(|s| s.precision_at_k.keys().copied())
            .collect();
        let mut header = vec!["bug_id".to_string(), "reciprocal_rank".to_string()];
        for k in &ks {
            header.push(format!("precision@{k}"));
        }
        for k in &ks {
            header.push(format!("recall@{k}"));
        }
        header.push("context_efficiency".to_string());
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.per_task {
            let mut cells = vec![row.bug_id.clone(), format!("{}", row.reciprocal_rank)];
            for k in &ks {
                cells.push(format!("{}", row.precision_at_k.get(k).copied().unwrap_or(0.0)));
            }
            for k in &ks {
                cells.push(format!("{}", row.recall_at_k.get(k).copied().unwrap_or(0.0)));
            }
            cells.push(format!("{}", row.context_efficiency));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// AGR-vs-flat comparison: both aggregate reports plus `agr − flat` deltas
/// keyed `mrr`, `context_efficiency`, `precision@k`, `recall@k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub agr: MetricsReport,
    pub flat: MetricsReport,
    pub deltas: BTreeMap<String, f64>,
}

/// Harness configuration: retrieval tuning, the `k` cutoffs to report, and
/// the evaluation clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub retrieval: RetrievalConfig,
    pub ks: Vec<usize>,
    pub now: i64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            retrieval: RetrievalConfig::default(),
            ks: vec![1, 5, 10],
            now: 0,
        }
    }
}

// ── scoring ────────────────────────────────────────────────────────────────

/// Score one retrieved context against one task. `retrieved.members` must
/// already be in descending relevance order (retrieval guarantees it).
pub fn score_task(
    retrieved: &RetrievedContext,
    task: &MrrTask,
    ks: &[usize],
    graph: &CodeGraph,
) -> Result<TaskScore> {
    if task.gold_chunks.is_empty() {
        return Err(Error::Task {
            task: task.bug_id.clone(),
            reason: "cannot score against an empty gold set".to_string(),
        });
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::Task {
            task: task.bug_id.clone(),
            reason: "k cutoffs must be at least 1".to_string(),
        });
    }

    let gold: BTreeSet<&NodeId> = task.gold_chunks.iter().collect();
    let ranked: Vec<&NodeId> = retrieved.members.iter().map(|m| &m.node).collect();

    let reciprocal_rank = ranked
        .iter()
        .position(|id| gold.contains(id))
        .map(|p| 1.0 / (p + 1) as f64)
        .unwrap_or(0.0);

    let mut precision_at_k = BTreeMap::new();
    let mut recall_at_k = BTreeMap::new();
    for &k in ks {
        let hits = ranked.iter().take(k).filter(|id| gold.contains(*id)).count();
        precision_at_k.insert(k, hits as f64 / k as f64);
        recall_at_k.insert(k, hits as f64 / gold.len() as f64);
    }

    let text_len = |id: &NodeId| graph.node(id).map(|n| n.text.len()).unwrap_or(0) as f64;
    let mut gold_text = 0.0;
    let mut total_text = 0.0;
    for id in &ranked {
        let len = text_len(id);
        total_text += len;
        if gold.contains(id) {
            gold_text += len;
        }
    }
    let context_efficiency = if total_text > 0.0 { gold_text / total_text } else { 0.0 };

    Ok(TaskScore {
        bug_id: task.bug_id.clone(),
        reciprocal_rank,
        precision_at_k,
        recall_at_k,
        context_efficiency,
        gold_total: gold.len(),
        retrieved_total: ranked.len(),
    })
}

/// Score a single retrieval as a one-task report.
pub fn score_retrieval(
    retrieved: &RetrievedContext,
    task: &MrrTask,
    ks: &[usize],
    graph: &CodeGraph,
) -> Result<MetricsReport> {
    MetricsReport::aggregate(vec![score_task(retrieved, task, ks, graph)?], 0.0)
}

// ── comparison harness ─────────────────────────────────────────────────────

/// Run adaptive and flat retrieval over every `(task, graph)` pair and
/// aggregate both sides. The flat baseline's budget is the adaptive run's
/// returned size per task, so the comparison is budget-matched. Tasks are
/// independent; aggregation is input-order independent.
pub fn run_comparison(
    pairs: &[(MrrTask, CodeGraph)],
    config: &EvalConfig,
) -> Result<ComparisonReport> {
    if pairs.is_empty() {
        return Err(Error::NoTasks);
    }
    let mut agr_scores = Vec::with_capacity(pairs.len());
    let mut flat_scores = Vec::with_capacity(pairs.len());
    for (task, graph) in pairs {
        let query = task_query(task, graph)?;
        let agr_ctx = retrieve(graph, &query, &config.retrieval, config.now)?;
        let flat_ctx = flat_topk_retrieve(graph, &query, agr_ctx.members.len())?;
        agr_scores.push(score_task(&agr_ctx, task, &config.ks, graph)?);
        flat_scores.push(score_task(&flat_ctx, task, &config.ks, graph)?);
    }
    let agr = MetricsReport::aggregate(agr_scores, 0.0)?;
    let flat = MetricsReport::aggregate(flat_scores, 0.0)?;

    let mut deltas = BTreeMap::new();
    deltas.insert("mrr".to_string(), agr.mrr - flat.mrr);
    deltas.insert(
        "context_efficiency".to_string(),
        agr.context_efficiency - flat.context_efficiency,
    );
    for (&k, &p) in &agr.precision_at_k {
        deltas.insert(
            format!("precision@{k}"),
            p - flat.precision_at_k.get(&k).copied().unwrap_or(0.0),
        );
    }
    for (&k, &r) in &agr.recall_at_k {
        deltas.insert(
            format!("recall@{k}"),
            r - flat.recall_at_k.get(&k).copied().unwrap_or(0.0),
        );
    }
    Ok(ComparisonReport { agr, flat, deltas })
}

/// Build the retrieval query a task implies, verifying the task actually
/// belongs to this graph.
fn task_query(task: &MrrTask, graph: &CodeGraph) -> Result<Query> {
    for gold in &task.gold_chunks {
        if graph.node(gold).is_none() {
            return Err(Error::Task {
                task: task.bug_id.clone(),
                reason: format!("gold chunk `{gold}` is not in the supplied graph"),
            });
        }
    }
    let description = task
        .evaluation
        .get("bug_description")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Task {
            task: task.bug_id.clone(),
            reason: "evaluation.bug_description is required to form a query".to_string(),
        })?;
    Ok(Query::from_text(description))
}

// ── task files ─────────────────────────────────────────────────────────────

/// Parse a task document. Beyond the known snake_case keys, anything else
/// at the top level is preserved inside the `evaluation` map, and
/// `temporal_range` accepts either `[start, end]` epochs or the listing
/// style `"YYYY-MM-DD to YYYY-MM-DD"`.
pub fn load_task(json: &str) -> Result<MrrTask> {
    let value: Value = serde_json::from_str(json)?;
    let mut doc = match value {
        Value::Object(map) => map,
        _ => {
            return Err(Error::Task {
                task: "<document>".to_string(),
                reason: "task document root must be an object".to_string(),
            })
        }
    };
    let name = doc_name(&doc);
    let fail = move |reason: String| Error::Task {
        task: name.clone(),
        reason,
    };

    let bug_id = match doc.remove("bug_id") {
        Some(Value::String(s)) if !s.is_empty() => s,
        _ => return Err(fail("missing or empty bug_id".to_string())),
    };
    let scattered_files = match doc.remove("scattered_files") {
        Some(value) => string_list(value, "scattered_files").map_err(&fail)?,
        None => return Err(fail("missing scattered_files".to_string())),
    };
    if scattered_files.is_empty() {
        return Err(fail("scattered_files must be non-empty".to_string()));
    }

    let repo_snapshot = match doc.remove("repo_snapshot") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(fail("repo_snapshot must be a string".to_string())),
        None => String::new(),
    };
    let failing_tests = match doc.remove("failing_tests") {
        Some(value) => string_list(value, "failing_tests").map_err(&fail)?,
        None => Vec::new(),
    };
    let gold_chunks = match doc.remove("gold_chunks") {
        Some(value) => string_list(value, "gold_chunks")
            .map_err(&fail)?
            .into_iter()
            .map(NodeId::from)
            .collect(),
        None => Vec::new(),
    };
    let temporal_range = match doc.remove("temporal_range") {
        Some(value) => parse_temporal_range(&value).map_err(&fail)?,
        None => (0, 0),
    };

    // Explicit evaluation options first, then every unknown key.
    let mut evaluation = match doc.remove("evaluation") {
        Some(Value::Object(map)) => map,
        Some(_) => return Err(fail("evaluation must be an object".to_string())),
        None => Map::new(),
    };
    for (key, value) in doc {
        evaluation.insert(key, value);
    }

    Ok(MrrTask {
        bug_id,
        repo_snapshot,
        failing_tests,
        scattered_files,
        gold_chunks,
        temporal_range,
        evaluation,
    })
}

fn doc_name(doc: &Map<String, Value>) -> String {
    doc.get("bug_id")
        .and_then(Value::as_str)
        .unwrap_or("<document>")
        .to_string()
}

fn string_list(value: Value, field: &str) -> std::result::Result<Vec<String>, String> {
    let items = match value {
        Value::Array(items) => items,
        _ => return Err(format!("{field} must be an array of strings")),
    };
    items
        .into_iter()
        .map(|item| match item {
            Value::String(s) => Ok(s),
            other => Err(format!("{field} entries must be strings, got {other}")),
        })
        .collect()
}

fn parse_temporal_range(value: &Value) -> std::result::Result<(i64, i64), String> {
    match value {
        Value::Array(items) if items.len() == 2 => {
            let start = items[0].as_i64();
            let end = items[1].as_i64();
            match (start, end) {
                (Some(s), Some(e)) => Ok((s, e)),
                _ => Err("temporal_range array entries must be epoch seconds".to_string()),
            }
        }
        Value::String(s) => {
            let (start, end) = s
                .split_once(" to ")
                .ok_or_else(|| format!("temporal_range `{s}` is not `start to end`"))?;
            Ok((parse_date(start.trim())?, parse_date(end.trim())?))
        }
        other => Err(format!("temporal_range must be [start, end] or a string, got {other}")),
    }
}

fn parse_date(s: &str) -> std::result::Result<i64, String> {
    let date = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| format!("bad date `{s}`: {e}"))?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight is always valid")
        .and_utc()
        .timestamp())
}
