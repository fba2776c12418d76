//! Command-line surface for the debugging-context engine.
//!
//! Exit codes: 0 success, 1 domain failure (including a fix session that
//! fails to converge), 2 usage error, 3 I/O error. `--json` switches to
//! machine-readable output; `--seed` pins all randomness; `--now` replaces
//! the wall clock everywhere time matters, so identical invocations are
//! byte-identical.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use debugraph::error::ErrorCategory;
use debugraph::eval::{
    generate_scenario, load_task, run_comparison, EvalConfig, MetricsReport, MrrTask, Scenario,
    ScenarioParams,
};
use debugraph::fixloop::{
    run_session, BugReport, CommandSandbox, FixProposal, LoopConfig, PdmReplayProposer,
    ScriptedProposer, SessionStatus, TestSuites,
};
use debugraph::graph::{
    emit_manifest, ingest_manifest, scan_repository, CodeGraph, IngestMode, ScanOptions,
};
use debugraph::pdm::{DebugPattern, PdmStore, Probe};
use debugraph::retrieval::{flat_topk_retrieve, retrieve, Query, RetrievalConfig};
use debugraph::{Error, Result};

/// Environment variable naming the default pattern-store directory.
const STORE_ENV: &str = "DEBUGRAPH_STORE";

// ── argument surface ───────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "debugraph",
    version,
    about = "Repository-scale debugging context: graph indexing, adaptive retrieval, \
             debug memory, fix-loop runs, and benchmark evaluation"
)]
struct Cli {
    /// Emit machine-readable JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    /// Evaluation clock: epoch seconds, RFC 3339, or YYYY-MM-DD.
    #[arg(long, global = true, default_value = "0", value_name = "TIME")]
    now: String,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph manifest from a repository tree or revalidate one.
    Index(IndexArgs),
    /// Run adaptive (or flat) retrieval against a graph manifest.
    Retrieve(RetrieveArgs),
    /// Insert a debug pattern record into the store.
    PdmStore(PdmStoreArgs),
    /// Rank stored patterns against a probe.
    PdmQuery(PdmQueryArgs),
    /// Apply the retention policy and report evictions.
    PdmGc(PdmGcArgs),
    /// Drive a fix-test-refine session from scripted proposals.
    Fixloop(FixloopArgs),
    /// Generate synthetic benchmark scenarios with planted ground truth.
    EvalGenerate(EvalGenerateArgs),
    /// Score scenario retrievals, optionally comparing AGR to flat top-k.
    EvalRun(EvalRunArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct IndexSource {
    /// Repository root to scan.
    #[arg(long, value_name = "DIR")]
    repo: Option<PathBuf>,
    /// Existing manifest to validate and normalize.
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    source: IndexSource,
    /// Accept unknown manifest fields with warnings instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Optional JSON-lines commit log folded into a scan.
    #[arg(long, value_name = "FILE")]
    commit_log: Option<PathBuf>,
    /// Write the manifest here instead of inlining it in the output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RetrievalFlags {
    /// Confidence threshold that stops expansion.
    #[arg(long)]
    tau: Option<f64>,
    /// Maximum hop depth.
    #[arg(long)]
    k_max: Option<usize>,
    /// Candidates kept per iteration = ceil(ratio * k).
    #[arg(long)]
    selection_ratio: Option<f64>,
    /// Minimum confidence gain before depth escalates.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl RetrievalFlags {
    fn build(&self) -> RetrievalConfig {
        let mut config = RetrievalConfig::default();
        if let Some(tau) = self.tau {
            config.tau = tau;
        }
        if let Some(k_max) = self.k_max {
            config.k_max = k_max;
        }
        if let Some(ratio) = self.selection_ratio {
            config.selection_ratio = ratio;
        }
        if let Some(epsilon) = self.epsilon {
            config.epsilon = epsilon;
        }
        config
    }
}

#[derive(Args)]
struct RetrieveArgs {
    /// Graph manifest to retrieve from.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Query text.
    #[arg(long, default_value = "")]
    query: String,
    /// Seed hint: a node id or file path (repeatable).
    #[arg(long = "hint", value_name = "ID_OR_PATH")]
    hints: Vec<String>,
    /// Stack frame as path:line (repeatable).
    #[arg(long = "frame", value_name = "PATH:LINE")]
    frames: Vec<String>,
    #[command(flatten)]
    tuning: RetrievalFlags,
    /// Use the structure-blind flat top-k baseline instead.
    #[arg(long)]
    flat: bool,
    /// Member budget for --flat.
    #[arg(long, requires = "flat")]
    budget: Option<usize>,
    /// Accept unknown manifest fields.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct StoreFlag {
    /// Pattern store directory (defaults to $DEBUGRAPH_STORE).
    #[arg(long, value_name = "DIR")]
    store: Option<PathBuf>,
}

impl StoreFlag {
    fn resolve(&self) -> Result<PathBuf> {
        self.store
            .clone()
            .or_else(|| std::env::var_os(STORE_ENV).map(PathBuf::from))
            .ok_or_else(|| {
                Error::InvalidConfig(format!("pass --store or set ${STORE_ENV}"))
            })
    }
}

#[derive(Args)]
struct PdmStoreArgs {
    #[command(flatten)]
    store: StoreFlag,
    /// Debug pattern record as a JSON file.
    #[arg(long, value_name = "FILE")]
    record: PathBuf,
}

#[derive(Args)]
struct PdmQueryArgs {
    #[command(flatten)]
    store: StoreFlag,
    /// Probe signature text.
    #[arg(long)]
    signature: String,
    /// Context path the probe carries (repeatable).
    #[arg(long = "path", value_name = "PATH")]
    paths: Vec<String>,
    /// Maximum hits returned.
    #[arg(long, default_value_t = 5)]
    limit: usize,
}

#[derive(Args)]
struct PdmGcArgs {
    #[command(flatten)]
    store: StoreFlag,
}

#[derive(Args)]
struct FixloopArgs {
    /// Graph manifest for context retrieval.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Pristine workspace the session copies from (never mutated).
    #[arg(long, value_name = "DIR")]
    workspace: PathBuf,
    /// Bug report JSON file.
    #[arg(long, value_name = "FILE")]
    bug: PathBuf,
    #[command(flatten)]
    store: StoreFlag,
    /// Fix proposal JSON file, in trial order (repeatable, required).
    #[arg(long = "proposal", value_name = "FILE", required = true)]
    proposals: Vec<PathBuf>,
    /// Target test (repeatable; defaults to the bug's failing tests).
    #[arg(long = "target", value_name = "TEST")]
    target: Vec<String>,
    /// Extended regression test (repeatable).
    #[arg(long = "extended", value_name = "TEST")]
    extended: Vec<String>,
    /// Iteration budget.
    #[arg(long, default_value_t = 10)]
    max_iterations: usize,
    /// Test runner program.
    #[arg(long, default_value = "sh")]
    runner: String,
    /// Runner arguments; `{test}` expands to the test id (repeatable).
    #[arg(long = "runner-arg", value_name = "ARG", allow_hyphen_values = true)]
    runner_args: Vec<String>,
    /// Per-test timeout in seconds.
    #[arg(long, default_value_t = 30)]
    test_timeout_secs: u64,
    /// Include wall-clock phase timings in JSON output (non-reproducible).
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    tuning: RetrievalFlags,
    /// Accept unknown manifest fields.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct EvalGenerateArgs {
    /// Directory scenario files are written into.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of scenarios.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Pin the retrievable file count (otherwise sampled 10–50).
    #[arg(long)]
    files: Option<usize>,
    /// Pin the gold chain length (otherwise sampled 3–7).
    #[arg(long)]
    hops: Option<usize>,
    /// Noise share of the files.
    #[arg(long, default_value_t = 0.7)]
    noise: f64,
}

#[derive(Args)]
struct EvalRunArgs {
    /// Scenario file or directory of scenario .json files.
    #[arg(long, value_name = "PATH")]
    tasks: PathBuf,
    /// Also run the flat baseline and report deltas.
    #[arg(long)]
    compare: bool,
    /// Report cutoff k (repeatable; default 1, 5, 10).
    #[arg(long = "k", value_name = "K")]
    ks: Vec<usize>,
    /// Write the per-task rows as CSV here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    tuning: RetrievalFlags,
}

// ── dispatch ───────────────────────────────────────────────────────────────

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    0
                }
                _ => {
                    let _ = err.print();
                    2
                }
            };
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(match err.category() {
                ErrorCategory::Io => 3,
                ErrorCategory::Usage => 2,
                _ => 1,
            });
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let now = parse_now(&cli.now)?;
    match cli.command {
        Command::Index(ref args) => cmd_index(args, cli.json),
        Command::Retrieve(ref args) => cmd_retrieve(args, cli.json, now),
        Command::PdmStore(ref args) => cmd_pdm_store(args, cli.json),
        Command::PdmQuery(ref args) => cmd_pdm_query(args, cli.json, now),
        Command::PdmGc(ref args) => cmd_pdm_gc(args, cli.json, now),
        Command::Fixloop(ref args) => cmd_fixloop(args, cli.json, now),
        Command::EvalGenerate(ref args) => cmd_eval_generate(args, cli.json, cli.seed),
        Command::EvalRun(ref args) => cmd_eval_run(args, cli.json, now),
    }
}

/// Epoch seconds, RFC 3339, or a bare date at midnight UTC.
fn parse_now(input: &str) -> Result<i64> {
    if let Ok(epoch) = input.parse::<i64>() {
        return Ok(epoch);
    }
    if let Ok(stamp) = chrono::DateTime::parse_from_rfc3339(input) {
        return Ok(stamp.timestamp());
    }
    if let Ok(date) = chrono::NaiveDate::parse_from_str(input, "%Y-%m-%d") {
        return Ok(date
            .and_hms_opt(0, 0, 0)
            .expect("midnight is always valid")
            .and_utc()
            .timestamp());
    }
    Err(Error::InvalidConfig(format!(
        "cannot parse --now `{input}` (use epoch seconds, RFC 3339, or YYYY-MM-DD)"
    )))
}

fn emit(json_mode: bool, value: &Value, human: impl FnOnce() -> String) {
    let text = if json_mode {
        serde_json::to_string_pretty(value).expect("serializable")
    } else {
        human()
    };
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{text}").is_err() {
        // The reader went away (output piped into `head` and the like).
        std::process::exit(0);
    }
}

/// Read a file, naming it in the error (bare ENOENT is useless in a pipeline).
fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_graph(path: &Path, lenient: bool) -> Result<(CodeGraph, Vec<String>)> {
    let text = read_file(path)?;
    let mode = if lenient { IngestMode::Lenient } else { IngestMode::Strict };
    let report = ingest_manifest(&text, mode)?;
    Ok((report.graph, report.warnings))
}

// ── commands ───────────────────────────────────────────────────────────────

fn cmd_index(args: &IndexArgs, json_mode: bool) -> Result<i32> {
    let (graph, warnings, scanned) = match (&args.source.repo, &args.source.manifest) {
        (Some(repo), None) => {
            let options = ScanOptions {
                commit_log: args.commit_log.clone(),
                ..ScanOptions::default()
            };
            let report = scan_repository(repo, &options)?;
            let counts = json!({"files": report.files, "functions": report.functions});
            (report.graph, report.warnings, Some(counts))
        }
        (None, Some(manifest)) => {
            let (graph, warnings) = load_graph(manifest, args.lenient)?;
            (graph, warnings, None)
        }
        _ => unreachable!("clap enforces exactly one source"),
    };

    let manifest = emit_manifest(&graph);
    let mut summary = json!({
        "nodes": manifest.nodes.len(),
        "edges": manifest.edges.len(),
        "warnings": warnings,
    });
    if let Some(counts) = scanned {
        summary["scanned"] = counts;
    }
    if let Some(out) = &args.out {
        write_file(out, &serde_json::to_string_pretty(&manifest)?)?;
        summary["out"] = json!(out.display().to_string());
    } else if json_mode {
        summary["manifest"] = serde_json::to_value(&manifest)?;
    }
    emit(json_mode, &summary, || {
        let mut line = format!(
            "indexed {} nodes, {} edges",
            manifest.nodes.len(),
            manifest.edges.len()
        );
        if let Some(out) = &args.out {
            line.push_str(&format!(" -> {}", out.display()));
        }
        for warning in &warnings {
            line.push_str(&format!("\nwarning: {warning}"));
        }
        line
    });
    Ok(0)
}

fn build_query(text: &str, hints: &[String], frames: &[String]) -> Result<Query> {
    let mut query = Query::from_text(text);
    for hint in hints {
        query = query.with_hint(hint.clone());
    }
    for frame in frames {
        let (path, line) = frame.rsplit_once(':').ok_or_else(|| {
            Error::InvalidConfig(format!("--frame `{frame}` is not path:line"))
        })?;
        let line: u32 = line
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("--frame line `{line}` is not a number")))?;
        query = query.with_frame(path.to_string(), line);
    }
    Ok(query)
}

fn cmd_retrieve(args: &RetrieveArgs, json_mode: bool, now: i64) -> Result<i32> {
    let config = args.tuning.build();
    config.validate()?;
    let query = build_query(&args.query, &args.hints, &args.frames)?;
    query.validate()?;

    let (graph, _) = load_graph(&args.graph, args.lenient)?;
    let context = if args.flat {
        let budget = args.budget.ok_or_else(|| {
            Error::InvalidConfig("--flat needs --budget".to_string())
        })?;
        flat_topk_retrieve(&graph, &query, budget)?
    } else {
        retrieve(&graph, &query, &config, now)?
    };

    let value = json!({
        "confidence": context.confidence(),
        "context": context,
    });
    emit(json_mode, &value, || {
        let mut out = format!(
            "confidence {:.4}  terminated_by {:?}  members {}  visited {}",
            context.confidence(),
            context.terminated_by,
            context.members.len(),
            context.visited_count
        );
        for (rank, member) in context.members.iter().enumerate() {
            out.push_str(&format!(
                "\n{:>4}  {:.4}  hop {}  {}",
                rank + 1,
                member.relevance,
                member.hop,
                member.node
            ));
        }
        out
    });
    Ok(0)
}

fn cmd_pdm_store(args: &PdmStoreArgs, json_mode: bool) -> Result<i32> {
    let dir = args.store.resolve()?;
    let text = read_file(&args.record)?;
    let record: DebugPattern = serde_json::from_str(&text)?;
    let mut store = PdmStore::open(&dir)?;
    let id = record.id.clone();
    store.store(record)?;
    let value = json!({"stored": id, "records": store.len()});
    emit(json_mode, &value, || {
        format!("stored `{id}` ({} records)", store.len())
    });
    Ok(0)
}

fn cmd_pdm_query(args: &PdmQueryArgs, json_mode: bool, now: i64) -> Result<i32> {
    let dir = args.store.resolve()?;
    let store = PdmStore::open(&dir)?;
    let probe = Probe::new(args.signature.clone(), now).with_paths(args.paths.clone());
    let hits = store.query(&probe, args.limit);
    let value = json!({
        "hits": hits
            .iter()
            .map(|(record, score)| json!({"record": record, "score": score}))
            .collect::<Vec<_>>(),
    });
    emit(json_mode, &value, || {
        if hits.is_empty() {
            return "no hits".to_string();
        }
        hits.iter()
            .map(|(record, score)| {
                format!(
                    "{:.4}  {}  [{:?}] reuse {}",
                    score.total, record.id, record.status, record.reuse_count
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(0)
}

fn cmd_pdm_gc(args: &PdmGcArgs, json_mode: bool, now: i64) -> Result<i32> {
    let dir = args.store.resolve()?;
    let mut store = PdmStore::open(&dir)?;
    let report = store.apply_retention(now)?;
    let value = serde_json::to_value(&report)?;
    emit(json_mode, &value, || {
        if report.is_empty() {
            format!("nothing to evict ({} records retained)", store.len())
        } else {
            format!(
                "evicted {} records ({} retained)",
                report.total(),
                store.len()
            )
        }
    });
    Ok(0)
}

fn cmd_fixloop(args: &FixloopArgs, json_mode: bool, now: i64) -> Result<i32> {
    let retrieval = args.tuning.build();
    retrieval.validate()?;
    if args.max_iterations == 0 {
        return Err(Error::InvalidConfig("--max-iterations must be at least 1".into()));
    }
    let dir = args.store.resolve()?;

    let bug: BugReport = serde_json::from_str(&read_file(&args.bug)?)?;
    bug.validate()?;
    let mut proposals = Vec::with_capacity(args.proposals.len());
    for path in &args.proposals {
        let proposal: FixProposal = serde_json::from_str(&read_file(path)?)?;
        proposal.validate()?;
        proposals.push(proposal);
    }
    let (graph, _) = load_graph(&args.graph, args.lenient)?;

    let target = if args.target.is_empty() {
        bug.failing_tests.clone()
    } else {
        args.target.clone()
    };
    let suites = TestSuites::new(target).with_extended(args.extended.clone());

    let runner_args = if args.runner_args.is_empty() {
        vec!["{test}".to_string()]
    } else {
        args.runner_args.clone()
    };
    let sandbox = CommandSandbox::new(&args.runner, runner_args)
        .with_timeout(std::time::Duration::from_secs(args.test_timeout_secs));
    let mut proposer = PdmReplayProposer::new(ScriptedProposer::new(proposals));
    let mut pdm = PdmStore::open(&dir)?;
    let config = LoopConfig {
        max_iterations: args.max_iterations,
        retrieval,
        now,
    };

    let session = run_session(
        &bug,
        &graph,
        &args.workspace,
        &suites,
        &mut pdm,
        &mut proposer,
        &sandbox,
        &config,
    )?;

    let mut value = serde_json::to_value(&session)?;
    if !args.timings {
        // Wall-clock timings are the only non-reproducible field.
        value.as_object_mut().expect("session object").remove("phase_millis");
    }
    let validated = session.final_status == SessionStatus::Validated;
    emit(json_mode, &value, || {
        format!(
            "{} after {} iteration(s)",
            if validated { "validated" } else { "failed to converge" },
            session.iterations_used
        )
    });
    Ok(if validated { 0 } else { 1 })
}

fn cmd_eval_generate(args: &EvalGenerateArgs, json_mode: bool, seed: u64) -> Result<i32> {
    if args.count == 0 {
        return Err(Error::InvalidConfig("--count must be at least 1".into()));
    }
    let pinned = match (args.files, args.hops) {
        (Some(files), Some(hops)) => Some(ScenarioParams {
            files,
            noise_ratio: args.noise,
            hops,
        }),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "--files and --hops must be pinned together".into(),
            ))
        }
    };
    if let Some(params) = &pinned {
        params.validate()?;
    }

    std::fs::create_dir_all(&args.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = Vec::with_capacity(args.count);
    for index in 0..args.count {
        let params = pinned.unwrap_or_else(|| ScenarioParams::sample(&mut rng));
        let scenario = generate_scenario(rng.random(), &params)?;
        let path = args.out.join(format!("scenario-{index:04}.json"));
        write_file(&path, &serde_json::to_string_pretty(&scenario)?)?;
        written.push(path.display().to_string());
    }
    let value = json!({"count": written.len(), "written": written});
    emit(json_mode, &value, || {
        format!("wrote {} scenario(s) under {}", args.count, args.out.display())
    });
    Ok(0)
}

fn load_scenarios(path: &Path) -> Result<Vec<(MrrTask, CodeGraph)>> {
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let entry = entry?;
            let p = entry.path();
            if p.extension().is_some_and(|e| e == "json") {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return Err(Error::NoTasks);
    }

    let mut pairs = Vec::with_capacity(files.len());
    for file in files {
        let text = read_file(&file)?;
        // A scenario bundle carries its own graph; a bare task document
        // cannot be scored without one.
        if let Ok(scenario) = serde_json::from_str::<Scenario>(&text) {
            let graph = scenario.build_graph()?;
            pairs.push((scenario.task, graph));
        } else {
            let task = load_task(&text)?;
            return Err(Error::Task {
                task: task.bug_id,
                reason: format!(
                    "`{}` is a bare task without a graph manifest; evaluate scenario bundles",
                    file.display()
                ),
            });
        }
    }
    Ok(pairs)
}

fn cmd_eval_run(args: &EvalRunArgs, json_mode: bool, now: i64) -> Result<i32> {
    let retrieval = args.tuning.build();
    retrieval.validate()?;
    let ks = if args.ks.is_empty() {
        vec![1, 5, 10]
    } else {
        let distinct: BTreeSet<usize> = args.ks.iter().copied().collect();
        distinct.into_iter().collect()
    };
    let config = EvalConfig { retrieval, ks, now };

    let pairs = load_scenarios(&args.tasks)?;
    let comparison = run_comparison(&pairs, &config)?;

    if let Some(csv) = &args.csv {
        write_file(csv, &comparison.agr.per_task_csv())?;
    }

    let summarize = |report: &MetricsReport| {
        format!(
            "mrr {:.4}  recall@10 {:.4}  precision@10 {:.4}  efficiency {:.4}",
            report.mrr,
            report.recall_at_k.get(&10).copied().unwrap_or(0.0),
            report.precision_at_k.get(&10).copied().unwrap_or(0.0),
            report.context_efficiency
        )
    };
    if args.compare {
        let value = serde_json::to_value(&comparison)?;
        emit(json_mode, &value, || {
            let mut out = format!(
                "{} task(s)\nagr:  {}\nflat: {}",
                comparison.agr.per_task.len(),
                summarize(&comparison.agr),
                summarize(&comparison.flat)
            );
            for (metric, delta) in &comparison.deltas {
                out.push_str(&format!("\ndelta {metric}: {delta:+.4}"));
            }
            out
        });
    } else {
        let value = serde_json::to_value(&comparison.agr)?;
        emit(json_mode, &value, || {
            format!(
                "{} task(s)\n{}",
                comparison.agr.per_task.len(),
                summarize(&comparison.agr)
            )
        });
    }
    Ok(0)
}
