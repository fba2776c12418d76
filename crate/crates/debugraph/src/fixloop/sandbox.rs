//! Test execution behind a narrow interface.
//!
//! The contract: one command per test id, exit code 0 means pass, captured
//! output becomes failure diagnostics. The built-in implementation shells
//! out with a per-test timeout; anything heavier (containers, remote
//! runners) implements [`Sandbox`] on the deployment side.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of one test command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestStatus {
    Pass,
    Fail,
    /// The test could not produce a verdict (timeout, killed).
    Error,
}

/// Outcome of running a test set. `success` holds exactly when every
/// individual test passed, enforced by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub success: bool,
    pub per_test: BTreeMap<String, TestStatus>,
    /// Captured diagnostics from non-passing tests.
    pub failure_text: String,
}

impl TestOutcome {
    pub fn from_results(per_test: BTreeMap<String, TestStatus>, failure_text: String) -> Self {
        let success = per_test.values().all(|s| *s == TestStatus::Pass);
        TestOutcome {
            success,
            per_test,
            failure_text,
        }
    }

    /// Vacuously successful outcome of an empty suite.
    pub fn empty() -> Self {
        TestOutcome::from_results(BTreeMap::new(), String::new())
    }
}

/// Runs a set of tests inside a workspace.
pub trait Sandbox {
    /// Run every test in `tests` with the workspace as working directory.
    /// Individual failures are data (recorded in the outcome); an `Err`
    /// means the sandbox itself broke and the session must abort.
    fn run_tests(&self, workspace: &Path, tests: &[String]) -> Result<TestOutcome>;
}

/// Default per-test timeout.
pub const DEFAULT_TEST_TIMEOUT: Duration = Duration::from_secs(30);

/// External-command sandbox: each test id is substituted into an argument
/// template and executed with the workspace as working directory.
///
/// ```
/// use debugraph::fixloop::CommandSandbox;
/// // Runs `sh <test-id>` for every test id.
/// let sandbox = CommandSandbox::new("sh", ["{test}"]);
/// ```
#[derive(Debug, Clone)]
pub struct CommandSandbox {
    program: String,
    args: Vec<String>,
    timeout: Duration,
}

impl CommandSandbox {
    /// `args` entries may contain the `{test}` placeholder, replaced by the
    /// test id at run time.
    pub fn new<I, S>(program: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CommandSandbox {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
            timeout: DEFAULT_TEST_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn run_one(&self, workspace: &Path, test: &str) -> Result<(TestStatus, String)> {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{test}", test))
            .collect();
        let mut child = Command::new(&self.program)
            .args(&args)
            .current_dir(workspace)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Sandbox {
                test: test.to_string(),
                reason: format!("failed to spawn `{}`: {e}", self.program),
            })?;

        let started = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| Error::Sandbox {
                test: test.to_string(),
                reason: format!("wait failed: {e}"),
            })? {
                Some(status) => break Some(status),
                None if started.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                None => std::thread::sleep(Duration::from_millis(5)),
            }
        };

        // Draining the pipes is only safe after a real exit: a timed-out
        // command may have spawned grandchildren that still hold the write
        // ends, and reading to EOF would block on them.
        let mut captured = String::new();
        if status.is_some() {
            if let Some(mut out) = child.stdout.take() {
                use std::io::Read;
                let _ = out.read_to_string(&mut captured);
            }
            if let Some(mut err) = child.stderr.take() {
                use std::io::Read;
                let _ = err.read_to_string(&mut captured);
            }
        }

        match status {
            Some(s) if s.success() => Ok((TestStatus::Pass, captured)),
            Some(_) => Ok((TestStatus::Fail, captured)),
            None => Ok((
                TestStatus::Error,
                format!("test `{test}` timed out after {:?}", self.timeout),
            )),
        }
    }
}

impl Sandbox for CommandSandbox {
    fn run_tests(&self, workspace: &Path, tests: &[String]) -> Result<TestOutcome> {
        let mut per_test = BTreeMap::new();
        let mut failure_text = String::new();
        for test in tests {
            let (status, captured) = self.run_one(workspace, test)?;
            if status != TestStatus::Pass && !captured.trim().is_empty() {
                failure_text.push_str(&format!("[{test}] {}\n", captured.trim()));
            }
            per_test.insert(test.clone(), status);
        }
        Ok(TestOutcome::from_results(per_test, failure_text))
    }
}
