//! Best-effort repository scanning.
//!
//! `scan_repository` walks a source tree and builds a graph from cheap
//! line-level signals: one File node per text file, Function nodes with line
//! spans, AstChild/Import/Call/TestCovers edges, plus Commit nodes and
//! CoCommit edges when a commit log is supplied. It never fails on weird
//! input files — unreadable or oversized ones are skipped and reported in
//! the warnings list.
//!
//! Extraction is pluggable through [`SourceExtractor`]; the built-in
//! [`LinePatternExtractor`] recognizes `fn`/`def`/`function` definitions,
//! `use`/`import`/`require`/`#include` imports, and `name(...)` call sites.
//! It is intentionally approximate: good enough to wire a graph, not a
//! parser.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::UNIX_EPOCH;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{CodeGraph, EdgeKind, GraphEdge, GraphNode, NodeId, NodeKind};
use crate::error::Result;

const MAX_FILE_BYTES: u64 = 256 * 1024;
/// Commits touching more files than this produce no CoCommit pairs; bulk
/// reformat commits would otherwise dominate the graph with noise.
const MAX_COCOMMIT_FILES: usize = 20;

/// What a source extractor found in one file.
#[derive(Debug, Default, Clone)]
pub struct ExtractedFacts {
    /// (name, start line, 1-based) of each definition, in file order.
    pub functions: Vec<(String, u32)>,
    /// Imported module tokens (path segments, stems).
    pub imports: Vec<String>,
    /// (line, callee name) call sites.
    pub calls: Vec<(u32, String)>,
}

/// Pluggable per-file fact extractor.
pub trait SourceExtractor {
    fn extract(&self, path: &str, text: &str) -> ExtractedFacts;
}

/// The built-in pattern-based extractor.
#[derive(Debug, Default, Clone)]
pub struct LinePatternExtractor;

const CALL_KEYWORDS: [&str; 18] = [
    "if", "for", "while", "match", "switch", "return", "fn", "def", "function", "catch", "new",
    "loop", "assert", "print", "println", "format", "panic", "vec",
];

impl SourceExtractor for LinePatternExtractor {
    fn extract(&self, path: &str, text: &str) -> ExtractedFacts {
        let code = is_code_path(path);
        let mut facts = ExtractedFacts::default();
        if !code {
            return facts;
        }
        for (index, raw) in text.lines().enumerate() {
            let line_no = (index + 1) as u32;
            let line = raw.trim_start();
            if let Some(name) = definition_name(line) {
                facts.functions.push((name, line_no));
                continue;
            }
            if let Some(tokens) = import_tokens(line) {
                facts.imports.extend(tokens);
                continue;
            }
            for callee in call_sites(line) {
                facts.calls.push((line_no, callee));
            }
        }
        facts
    }
}

fn is_code_path(path: &str) -> bool {
    const CODE: [&str; 16] = [
        "rs", "py", "js", "ts", "jsx", "tsx", "go", "java", "c", "h", "cpp", "hpp", "rb", "cs",
        "kt", "swift",
    ];
    Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|ext| CODE.contains(&ext))
}

fn is_text_path(path: &str) -> bool {
    const TEXT: [&str; 8] = ["md", "txt", "toml", "yaml", "yml", "json", "cfg", "ini"];
    is_code_path(path)
        || Path::new(path)
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|ext| TEXT.contains(&ext))
}

fn definition_name(line: &str) -> Option<String> {
    for prefix in ["pub fn ", "fn ", "async fn ", "pub async fn ", "def ", "async def ", "function "] {
        if let Some(rest) = line.strip_prefix(prefix) {
            let name: String = rest
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            if !name.is_empty() && rest[name.len()..].trim_start().starts_with(['(', '<']) {
                return Some(name);
            }
        }
    }
    None
}

fn import_tokens(line: &str) -> Option<Vec<String>> {
    let segments = |spec: &str| -> Vec<String> {
        spec.split(|c: char| c == ':' || c == '.' || c == '/')
            .map(|s| s.trim_matches(|c: char| !c.is_alphanumeric() && c != '_'))
            .filter(|s| !s.is_empty())
            .map(|s| s.to_lowercase())
            .collect()
    };
    if let Some(rest) = line.strip_prefix("use ") {
        return Some(segments(rest.trim_end_matches(';')));
    }
    if let Some(rest) = line.strip_prefix("from ") {
        if let Some((module, _)) = rest.split_once(" import ") {
            return Some(segments(module));
        }
    }
    if let Some(rest) = line.strip_prefix("import ") {
        return Some(segments(rest.split(" as ").next().unwrap_or(rest)));
    }
    if let Some(start) = line.find("require(") {
        let spec: String = line[start + 8..]
            .chars()
            .skip_while(|c| *c == '\'' || *c == '"')
            .take_while(|c| *c != '\'' && *c != '"' && *c != ')')
            .collect();
        return Some(segments(&spec));
    }
    if let Some(rest) = line.strip_prefix("#include ") {
        return Some(segments(rest.trim_matches(['"', '<', '>']).trim()));
    }
    None
}

fn call_sites(line: &str) -> Vec<String> {
    let bytes = line.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'(' {
            // Walk back over an identifier.
            let mut j = i;
            while j > 0 && (bytes[j - 1].is_ascii_alphanumeric() || bytes[j - 1] == b'_') {
                j -= 1;
            }
            if j < i {
                let name = &line[j..i];
                let preceded_by_dot_def = j >= 3 && &line[j.saturating_sub(3)..j] == "fn ";
                if !preceded_by_dot_def
                    && !CALL_KEYWORDS.contains(&name)
                    && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                {
                    found.push(name.to_string());
                }
            }
        }
        i += 1;
    }
    found
}

/// One commit-log line: `{"id", "timestamp", "message", "files": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    #[serde(default)]
    pub timestamp: i64,
    #[serde(default)]
    pub message: String,
    #[serde(default)]
    pub files: Vec<String>,
}

/// Scan configuration.
pub struct ScanOptions {
    /// Glob patterns a path must match (any of). Empty means everything.
    pub include: Vec<String>,
    /// Glob patterns that exclude a path (any of).
    pub exclude: Vec<String>,
    /// Optional JSON-lines commit log to fold in.
    pub commit_log: Option<PathBuf>,
    /// Fact extractor; defaults to [`LinePatternExtractor`].
    pub extractor: Box<dyn SourceExtractor>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            include: Vec::new(),
            exclude: vec![
                ".git/**".into(),
                "target/**".into(),
                "node_modules/**".into(),
                "**/*.lock".into(),
            ],
            commit_log: None,
            extractor: Box::new(LinePatternExtractor),
        }
    }
}

/// Scan outcome: the graph plus per-file warnings and simple counts.
#[derive(Debug)]
pub struct ScanReport {
    pub graph: CodeGraph,
    pub warnings: Vec<String>,
    pub files: usize,
    pub functions: usize,
}

/// Walk `root` and build a graph. Never fails on individual files; only an
/// unreadable root or commit log is a hard error.
pub fn scan_repository(root: &Path, options: &ScanOptions) -> Result<ScanReport> {
    let mut warnings = Vec::new();
    let mut files: Vec<(String, i64, String)> = Vec::new(); // (relpath, mtime, text)

    let mut entries: Vec<_> = WalkDir::new(root)
        .follow_links(false)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .collect();
    entries.sort_by(|a, b| a.path().cmp(b.path()));

    for entry in entries {
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .to_string_lossy()
            .replace('\\', "/");
        if !path_selected(&rel, &options.include, &options.exclude) || !is_text_path(&rel) {
            continue;
        }
        let meta = match entry.metadata() {
            Ok(m) => m,
            Err(e) => {
                warnings.push(format!("skipped {rel}: {e}"));
                continue;
            }
        };
        if meta.len() > MAX_FILE_BYTES {
            warnings.push(format!("skipped {rel}: larger than {MAX_FILE_BYTES} bytes"));
            continue;
        }
        let mtime = meta
            .modified()
            .ok()
            .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        match fs::read(entry.path()) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(text) => files.push((rel, mtime, text)),
                Err(_) => warnings.push(format!("skipped {rel}: not valid UTF-8")),
            },
            Err(e) => warnings.push(format!("skipped {rel}: {e}")),
        }
    }

    let mut graph = CodeGraph::new();
    let mut functions_total = 0usize;
    // stem -> file node ids, fn name -> fn node ids: resolution tables.
    let mut stems: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
    let mut fn_names: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
    // per file: (facts, file node id, fn spans for call attribution)
    let mut scanned: Vec<(String, i64, ExtractedFacts, Vec<(String, u32, u32)>)> = Vec::new();

    for (rel, mtime, text) in &files {
        let file_id = NodeId::new(format!("file:{rel}"));
        let name = Path::new(rel)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| rel.clone());
        graph.add_node(
            GraphNode::new(file_id.clone(), NodeKind::File, &name)
                .with_path(rel.clone())
                .with_timestamp(*mtime)
                .with_text(text.clone()),
        )?;
        if let Some(stem) = Path::new(rel).file_stem().and_then(|s| s.to_str()) {
            stems.entry(stem.to_lowercase()).or_default().push(file_id.clone());
        }

        let facts = options.extractor.extract(rel, text);
        let line_count = text.lines().count() as u32;
        let mut spans: Vec<(String, u32, u32)> = Vec::new();
        for (index, (fn_name, start)) in facts.functions.iter().enumerate() {
            let end = facts
                .functions
                .get(index + 1)
                .map(|(_, next_start)| next_start.saturating_sub(1))
                .unwrap_or(line_count.max(*start));
            let fn_id = NodeId::new(format!("fn:{rel}:{fn_name}:{start}"));
            let body: String = text
                .lines()
                .skip(*start as usize - 1)
                .take((end - start + 1) as usize)
                .collect::<Vec<_>>()
                .join("\n");
            graph.add_node(
                GraphNode::new(fn_id.clone(), NodeKind::Function, fn_name)
                    .with_path(rel.clone())
                    .with_span(*start, end)
                    .with_timestamp(*mtime)
                    .with_text(body),
            )?;
            graph.merge_edge(GraphEdge::new(file_id.clone(), fn_id.clone(), EdgeKind::AstChild).at(*mtime))?;
            fn_names.entry(fn_name.clone()).or_default().push(fn_id.clone());
            spans.push((fn_name.clone(), *start, end));
            functions_total += 1;
        }
        scanned.push((rel.clone(), *mtime, facts, spans));
    }

    // Second pass: resolve imports, calls, and test coverage now that all
    // definition sites are known.
    for (rel, mtime, facts, spans) in &scanned {
        let file_id = NodeId::new(format!("file:{rel}"));
        let own_stem = Path::new(rel)
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let test_file = is_test_path(rel);
        let mut import_targets: BTreeSet<NodeId> = BTreeSet::new();
        for token in &facts.imports {
            if token == &own_stem {
                continue;
            }
            if let Some(ids) = stems.get(token) {
                import_targets.extend(ids.iter().cloned());
            }
        }
        for target in import_targets {
            if target != file_id {
                graph.merge_edge(GraphEdge::new(file_id.clone(), target.clone(), EdgeKind::Import).at(*mtime))?;
                if test_file {
                    graph.merge_edge(
                        GraphEdge::new(file_id.clone(), target, EdgeKind::TestCovers).at(*mtime),
                    )?;
                }
            }
        }

        for (line, callee) in &facts.calls {
            let Some(targets) = fn_names.get(callee) else {
                continue;
            };
            // Attribute the call to the enclosing function when the line
            // falls inside one, otherwise to the file itself.
            let src = spans
                .iter()
                .find(|(_, start, end)| line >= start && line <= end)
                .map(|(name, start, _)| NodeId::new(format!("fn:{rel}:{name}:{start}")))
                .unwrap_or_else(|| file_id.clone());
            for target in targets {
                if target != &src {
                    graph.merge_edge(GraphEdge::new(src.clone(), target.clone(), EdgeKind::Call).at(*mtime))?;
                }
            }
        }
    }

    if let Some(log_path) = &options.commit_log {
        ingest_commit_log(&mut graph, log_path, &mut warnings)?;
    }

    Ok(ScanReport {
        files: files.len(),
        functions: functions_total,
        graph,
        warnings,
    })
}

fn is_test_path(rel: &str) -> bool {
    let stem = Path::new(rel)
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    stem.starts_with("test_")
        || stem.ends_with("_test")
        || stem.ends_with(".test")
        || stem.ends_with("_spec")
        || rel.starts_with("tests/")
        || rel.contains("/tests/")
}

fn ingest_commit_log(
    graph: &mut CodeGraph,
    log_path: &Path,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let body = fs::read_to_string(log_path)?;
    for (index, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CommitRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("commit log line {}: {e}", index + 1));
                continue;
            }
        };
        let commit_id = NodeId::new(format!("commit:{}", record.id));
        if !graph.contains(&commit_id) {
            graph.add_node(
                GraphNode::new(commit_id, NodeKind::Commit, &record.id)
                    .with_timestamp(record.timestamp.max(0))
                    .with_text(record.message.clone()),
            )?;
        }
        // CoCommit edges between each pair of known co-modified files.
        let known: Vec<NodeId> = record
            .files
            .iter()
            .map(|f| NodeId::new(format!("file:{}", f.replace('\\', "/"))))
            .filter(|id| graph.contains(id))
            .collect();
        if known.len() < record.files.len() {
            warnings.push(format!(
                "commit {}: {} file(s) not in scan",
                record.id,
                record.files.len() - known.len()
            ));
        }
        if known.len() > MAX_COCOMMIT_FILES {
            warnings.push(format!(
                "commit {}: touches {} files, skipping co-commit pairs",
                record.id,
                known.len()
            ));
            continue;
        }
        for (i, a) in known.iter().enumerate() {
            for b in &known[i + 1..] {
                graph.merge_edge(
                    GraphEdge::new(a.clone(), b.clone(), EdgeKind::CoCommit)
                        .at(record.timestamp.max(0))
                        .note(record.id.clone()),
                )?;
            }
        }
    }
    Ok(())
}

// ── tiny glob matcher ──────────────────────────────────────────────────────
// Supports `*` (within a segment), `?`, and `**` (across segments).

fn path_selected(rel: &str, include: &[String], exclude: &[String]) -> bool {
    let included = include.is_empty() || include.iter().any(|p| glob_match(p, rel));
    let excluded = exclude.iter().any(|p| glob_match(p, rel));
    included && !excluded
}

fn glob_match(pattern: &str, path: &str) -> bool {
    let pat: Vec<&str> = pattern.split('/').collect();
    let segs: Vec<&str> = path.split('/').collect();
    match_segments(&pat, &segs)
}

fn match_segments(pat: &[&str], segs: &[&str]) -> bool {
    match pat.first() {
        None => segs.is_empty(),
        Some(&"**") => {
            // `**` eats zero or more whole segments.
            (0..=segs.len()).any(|skip| match_segments(&pat[1..], &segs[skip..]))
        }
        Some(first) => match segs.first() {
            None => false,
            Some(seg) => match_one(first, seg) && match_segments(&pat[1..], &segs[1..]),
        },
    }
}

fn match_one(pattern: &str, segment: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let s: Vec<char> = segment.chars().collect();
    fn walk(p: &[char], s: &[char]) -> bool {
        match p.first() {
            None => s.is_empty(),
            Some('*') => (0..=s.len()).any(|skip| walk(&p[1..], &s[skip..])),
            Some('?') => !s.is_empty() && walk(&p[1..], &s[1..]),
            Some(c) => s.first() == Some(c) && walk(&p[1..], &s[1..]),
        }
    }
    walk(&p, &s)
}
