//! End-to-end checks of the `debugraph` binary: exit codes, JSON output
//! shapes, determinism under pinned `--seed`/`--now`, and the full
//! index → retrieve → fixloop → memory pipeline driven purely through the
//! command line.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_debugraph"));
    // Keep ambient configuration out of the tests.
    cmd.env_remove("DEBUGRAPH_STORE");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

/// A two-file workspace whose check script passes once the marker flips.
fn write_workspace(root: &Path) {
    std::fs::create_dir_all(root.join("src")).unwrap();
    std::fs::write(
        root.join("src/cache.rs"),
        "// Session cache lookups.\nfn lookup_session(key: &str) -> Option<String> {\n    // STATE = broken\n    None\n}\n",
    )
    .unwrap();
    std::fs::write(
        root.join("src/main.rs"),
        "fn main() {\n    let session = lookup_session(\"user-1\");\n    println!(\"{session:?}\");\n}\n",
    )
    .unwrap();
}

#[test]
fn help_usage_and_io_failures_use_distinct_exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["bogus-command"]).status.code(), Some(2));
    // Domain validation of flags is a usage error.
    let bad_tau = run(&["retrieve", "--graph", "nowhere.json", "--query", "x", "--tau", "2.0"]);
    assert_eq!(bad_tau.status.code(), Some(2));
    // A missing input file is an I/O error and names the path.
    let missing = run(&["retrieve", "--graph", "nowhere.json", "--query", "x"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nowhere.json"));
}

#[test]
fn index_scan_feeds_retrieve() {
    let dir = TempDir::new().unwrap();
    write_workspace(dir.path());
    let graph = dir.path().join("graph.json");

    let indexed = stdout_json(&run(&[
        "index",
        "--repo",
        dir.path().to_str().unwrap(),
        "--out",
        graph.to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(indexed["scanned"]["files"], 2);
    assert!(indexed["nodes"].as_u64().unwrap() >= 2);

    let retrieved = stdout_json(&run(&[
        "retrieve",
        "--graph",
        graph.to_str().unwrap(),
        "--query",
        "session cache lookup broken",
        "--json",
    ]));
    let confidence = retrieved["confidence"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&confidence));
    assert!(!retrieved["context"]["members"].as_array().unwrap().is_empty());

    // The flat baseline honours its budget through the same interface.
    let flat = stdout_json(&run(&[
        "retrieve",
        "--graph",
        graph.to_str().unwrap(),
        "--query",
        "session cache lookup broken",
        "--flat",
        "--budget",
        "2",
        "--json",
    ]));
    assert!(flat["context"]["members"].as_array().unwrap().len() <= 2);
}

#[test]
fn retrieve_output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    write_workspace(dir.path());
    let graph = dir.path().join("graph.json");
    run(&["index", "--repo", dir.path().to_str().unwrap(), "--out", graph.to_str().unwrap()]);

    let args = [
        "retrieve",
        "--graph",
        graph.to_str().unwrap(),
        "--query",
        "session cache lookup broken",
        "--seed",
        "11",
        "--now",
        "2024-03-01",
        "--json",
    ];
    let first = run(&args).stdout;
    for _ in 0..2 {
        assert_eq!(run(&args).stdout, first);
    }
}

#[test]
fn eval_generate_is_reproducible_and_eval_run_scores_it() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let listing = stdout_json(&run(&[
            "eval-generate",
            "--out",
            out.to_str().unwrap(),
            "--count",
            "3",
            "--seed",
            "42",
            "--json",
        ]));
        assert_eq!(listing["count"], 3);
    }
    for index in 0..3 {
        let name = format!("scenario-{index:04}.json");
        assert_eq!(
            std::fs::read(out_a.join(&name)).unwrap(),
            std::fs::read(out_b.join(&name)).unwrap(),
            "{name} differs between identically seeded runs"
        );
    }

    let csv = dir.path().join("rows.csv");
    let report = stdout_json(&run(&[
        "eval-run",
        "--tasks",
        out_a.to_str().unwrap(),
        "--compare",
        "--csv",
        csv.to_str().unwrap(),
        "--now",
        "2024-06-01",
        "--json",
    ]));
    assert_eq!(report["agr"]["per_task"].as_array().unwrap().len(), 3);
    // Structure-guided retrieval must not trail the flat baseline on
    // planted scenarios.
    assert!(report["deltas"]["recall@10"].as_f64().unwrap() > 0.0);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 4, "header plus one row per task");
}

#[test]
fn fixloop_converges_stores_the_fix_and_reports_failures_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let repo = dir.path().join("repo");
    write_workspace(&repo);
    let graph = dir.path().join("graph.json");
    run(&["index", "--repo", repo.to_str().unwrap(), "--out", graph.to_str().unwrap()]);

    let bug = dir.path().join("bug.json");
    std::fs::write(
        &bug,
        serde_json::to_string(&serde_json::json!({
            "id": "bug-7",
            "title": "session lookup returns nothing",
            "description": "lookup_session in src/cache.rs yields None for live keys",
            "failing_tests": ["grep -q 'STATE = fixed' src/cache.rs"],
            "stack_frames": [["src/cache.rs", 3]],
            "reported_at": 1_700_000_000,
        }))
        .unwrap(),
    )
    .unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        serde_json::to_string(&serde_json::json!({
            "edits": [{"path": "src/main.rs", "original": "user-1", "replacement": "user-2"}],
            "rationale": "poke the call site",
            "proposer_confidence": 0.3,
        }))
        .unwrap(),
    )
    .unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        serde_json::to_string(&serde_json::json!({
            "edits": [{"path": "src/cache.rs", "original": "STATE = broken", "replacement": "STATE = fixed"}],
            "rationale": "restore the state marker",
            "proposer_confidence": 0.9,
        }))
        .unwrap(),
    )
    .unwrap();

    let store = dir.path().join("store");
    let session = stdout_json(&run(&[
        "fixloop",
        "--graph",
        graph.to_str().unwrap(),
        "--workspace",
        repo.to_str().unwrap(),
        "--bug",
        bug.to_str().unwrap(),
        "--store",
        store.to_str().unwrap(),
        "--proposal",
        bad.to_str().unwrap(),
        "--proposal",
        good.to_str().unwrap(),
        "--runner",
        "sh",
        "--runner-arg",
        "-c",
        "--runner-arg",
        "{test}",
        "--now",
        "1700000500",
        "--json",
    ]));
    assert_eq!(session["final_status"], "Validated");
    assert_eq!(session["iterations_used"], 2);
    // Wall-clock timings are suppressed so reruns stay byte-comparable.
    assert!(session.get("phase_millis").is_none());
    // The workspace itself is never mutated by the sandboxed runs.
    let source = std::fs::read_to_string(repo.join("src/cache.rs")).unwrap();
    assert!(source.contains("STATE = broken"));

    // The validated fix is now queryable memory.
    let hits = stdout_json(&run(&[
        "pdm-query",
        "--store",
        store.to_str().unwrap(),
        "--signature",
        "session lookup returns nothing lookup_session in src/cache.rs yields None for live keys",
        "--path",
        "src/cache.rs",
        "--now",
        "1700000600",
        "--json",
    ]));
    let first = &hits["hits"].as_array().unwrap()[0];
    assert_eq!(first["record"]["id"], "fix:bug-7");
    assert_eq!(first["record"]["status"], "ResolvedFix");

    // A hopeless budget reports the session but exits 1.
    let failed = bin()
        .args([
            "fixloop",
            "--graph",
            graph.to_str().unwrap(),
            "--workspace",
            repo.to_str().unwrap(),
            "--bug",
            bug.to_str().unwrap(),
            "--store",
            dir.path().join("store2").to_str().unwrap(),
            "--proposal",
            bad.to_str().unwrap(),
            "--max-iterations",
            "1",
            "--runner",
            "sh",
            "--runner-arg",
            "-c",
            "--runner-arg",
            "{test}",
            "--now",
            "1700000500",
            "--json",
        ])
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(1));
    let session: Value = serde_json::from_slice(&failed.stdout).unwrap();
    assert_eq!(session["final_status"], "FailedToConverge");
}

#[test]
fn pdm_commands_share_a_store_via_flag_or_environment() {
    let dir = TempDir::new().unwrap();
    let store = dir.path().join("store");
    let record = dir.path().join("record.json");
    std::fs::write(
        &record,
        serde_json::to_string(&serde_json::json!({
            "id": "fix:redis-ttl",
            "pattern": "redis timestamp precision mismatch in cache layer",
            "context_paths": ["src/cache/redis.rs"],
            "fix": "round timestamps to millis before compare",
            "confidence": 0.9,
            "created_at": 1_700_000_000,
            "last_used": 1_700_000_000,
            "status": "ResolvedFix",
        }))
        .unwrap(),
    )
    .unwrap();

    let stored = stdout_json(&run(&[
        "pdm-store",
        "--store",
        store.to_str().unwrap(),
        "--record",
        record.to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(stored["stored"], "fix:redis-ttl");
    assert_eq!(stored["records"], 1);

    // The environment variable stands in for --store.
    let queried = bin()
        .env("DEBUGRAPH_STORE", store.to_str().unwrap())
        .args([
            "pdm-query",
            "--signature",
            "redis timestamp precision mismatch",
            "--path",
            "src/cache/redis.rs",
            "--now",
            "1700050000",
            "--json",
        ])
        .output()
        .unwrap();
    let hits = stdout_json(&queried);
    assert_eq!(hits["hits"][0]["record"]["id"], "fix:redis-ttl");
    assert!(hits["hits"][0]["score"]["total"].as_f64().unwrap() >= 0.75);

    // Omitting both the flag and the variable is a usage error.
    let neither = run(&["pdm-query", "--signature", "anything"]);
    assert_eq!(neither.status.code(), Some(2));

    // Garbage collection is idempotent: a second sweep at the same
    // instant evicts nothing and prints the identical report.
    let gc_args = ["pdm-gc", "--store", store.to_str().unwrap(), "--now", "1700050000", "--json"];
    let first = run(&gc_args);
    let second = run(&gc_args);
    assert_eq!(first.stdout, second.stdout);
    let report = stdout_json(&second);
    assert!(report["evicted"].as_object().unwrap().is_empty());
}

#[test]
fn timestamps_accept_dates_and_reject_nonsense() {
    let dir = TempDir::new().unwrap();
    let store = dir.path().join("store");
    // --now as a calendar date parses; gibberish is a usage error.
    let ok = run(&["pdm-gc", "--store", store.to_str().unwrap(), "--now", "2024-01-01"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["pdm-gc", "--store", store.to_str().unwrap(), "--now", "yesterday"]);
    assert_eq!(bad.status.code(), Some(2));
}
