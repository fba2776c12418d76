//! debugraph: a repository-scale debugging context engine.
//!
//! The crate models a repository as a multi-signal graph (AST structure,
//! imports, calls, test coverage, logs, stack traces, commit history,
//! reviews, docs), retrieves debugging context by adaptive graph-guided
//! expansion with an entropy-based confidence stop, remembers resolved bugs
//! in a persistent debug memory, and drives an autonomous fix-test-refine
//! loop on top of both. An evaluation harness generates seeded synthetic
//! debugging scenarios and scores retrieval strategies against them.
//!
//! Entry points:
//! - [`graph::CodeGraph`] plus [`graph::scan_repository`] /
//!   [`graph::ingest_manifest`] to build graphs,
//! - [`retrieval::retrieve`] for adaptive context assembly,
//! - [`pdm::PdmStore`] for the debug memory,
//! - [`fixloop::run_session`] for the repair loop,
//! - [`eval`] for scenario generation and strategy comparison.

pub mod error;
pub mod eval;
pub mod fixloop;
pub mod graph;
pub mod pdm;
pub mod retrieval;
pub mod text;

pub use error::{Error, ErrorCategory, Result};
