//! Durable pattern storage: append log, snapshots, retention.
//!
//! Layout inside the store directory:
//! - `patterns.log` — one JSON record per line, append-only. Every mutation
//!   (store, reuse) appends the record's full current state, so replay is
//!   insert-or-replace by id.
//! - `snapshot.json` — full state plus the log byte offset it covers.
//!   Written by [`PdmStore::apply_retention`], which is how evictions
//!   survive a reload: replay starts after the snapshotted offset.
//!
//! Durability target is process death (lines are flushed per mutation), not
//! power loss; there is no fsync per record.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{hybrid_score, DebugPattern, PatternStatus, PdmScore, Probe, RetentionPolicy};
use super::{PATTERN_GATE, SEMANTIC_GATE};
use crate::error::{Error, Result};

const LOG_FILE: &str = "patterns.log";
const SNAPSHOT_FILE: &str = "snapshot.json";
const SECONDS_PER_DAY: i64 = 86_400;

/// What [`PdmStore::apply_retention`] removed, grouped by lifecycle status.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvictionReport {
    pub evicted: BTreeMap<PatternStatus, Vec<String>>,
    pub at: i64,
}

impl EvictionReport {
    pub fn total(&self) -> usize {
        self.evicted.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn contains(&self, id: &str) -> bool {
        self.evicted.values().any(|ids| ids.iter().any(|i| i == id))
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    log_offset: u64,
    records: Vec<DebugPattern>,
}

/// The persistent debug memory. Single writer, any number of readers:
/// mutations take `&mut self`, queries take `&self`.
#[derive(Debug)]
pub struct PdmStore {
    dir: PathBuf,
    records: BTreeMap<String, DebugPattern>,
    policy: RetentionPolicy,
}

impl PdmStore {
    /// Open (or create) a store rooted at `dir`, loading the snapshot and
    /// replaying any log entries past it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;

        let snapshot_path = dir.join(SNAPSHOT_FILE);
        let (mut records, offset) = if snapshot_path.exists() {
            let snapshot: Snapshot = serde_json::from_str(&std::fs::read_to_string(&snapshot_path)?)?;
            let map = snapshot
                .records
                .into_iter()
                .map(|r| (r.id.clone(), r))
                .collect();
            (map, snapshot.log_offset)
        } else {
            (BTreeMap::new(), 0)
        };

        let log_path = dir.join(LOG_FILE);
        if log_path.exists() {
            let mut file = File::open(&log_path)?;
            file.seek(SeekFrom::Start(offset))?;
            for line in BufReader::new(file).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: DebugPattern = serde_json::from_str(&line)?;
                records.insert(record.id.clone(), record);
            }
        }

        Ok(PdmStore {
            dir,
            records,
            policy: RetentionPolicy::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&DebugPattern> {
        self.records.get(id)
    }

    /// All records in id order.
    pub fn records(&self) -> impl Iterator<Item = &DebugPattern> {
        self.records.values()
    }

    pub fn policy(&self) -> &RetentionPolicy {
        &self.policy
    }

    pub fn set_policy(&mut self, policy: RetentionPolicy) -> Result<()> {
        policy.validate()?;
        self.policy = policy;
        Ok(())
    }

    /// Validate and durably append a new record. The id must be unused.
    pub fn store(&mut self, record: DebugPattern) -> Result<String> {
        record.validate()?;
        if self.records.contains_key(&record.id) {
            return Err(Error::DuplicatePattern(record.id));
        }
        self.append(&record)?;
        let id = record.id.clone();
        self.records.insert(id.clone(), record);
        Ok(id)
    }

    /// Rank stored records against `probe`. A record competes only if its
    /// semantic component reaches the cosine gate or its error tokens cover
    /// at least half the probe gate; ranking is by total score, then
    /// reuse count, then recency of use, then id.
    pub fn query(&self, probe: &Probe, limit: usize) -> Vec<(DebugPattern, PdmScore)> {
        let mut hits: Vec<(DebugPattern, PdmScore)> = self
            .records
            .values()
            .map(|r| (r.clone(), hybrid_score(r, probe)))
            .filter(|(_, s)| s.semantic >= SEMANTIC_GATE || s.pattern >= PATTERN_GATE)
            .collect();
        hits.sort_by(|(ra, sa), (rb, sb)| {
            sb.total
                .partial_cmp(&sa.total)
                .unwrap()
                .then(rb.reuse_count.cmp(&ra.reuse_count))
                .then(rb.last_used.cmp(&ra.last_used))
                .then(ra.id.cmp(&rb.id))
        });
        hits.truncate(limit);
        hits
    }

    /// Mark a stored pattern as reused at `now`: bumps `reuse_count`, moves
    /// `last_used` forward, and appends the updated record to the log.
    pub fn record_reuse(&mut self, id: &str, now: i64) -> Result<DebugPattern> {
        let record = self
            .records
            .get(id)
            .ok_or_else(|| Error::PatternNotFound(id.to_string()))?;
        if now < record.last_used {
            return Err(Error::TimeRegression {
                id: id.to_string(),
                attempted: now,
                last_used: record.last_used,
            });
        }
        let mut updated = record.clone();
        updated.reuse_count += 1;
        updated.last_used = now;
        self.append(&updated)?;
        self.records.insert(id.to_string(), updated.clone());
        Ok(updated)
    }

    /// Apply the retention policy as of `now` and persist the result via a
    /// snapshot (so evictions survive reload). Re-running at the same time
    /// is a no-op.
    pub fn apply_retention(&mut self, now: i64) -> Result<EvictionReport> {
        let policy = &self.policy;
        let mut evicted: BTreeMap<PatternStatus, Vec<String>> = BTreeMap::new();

        // Rank CodeVersion records newest-first to apply the count cap.
        let mut versions: Vec<(&String, i64)> = self
            .records
            .iter()
            .filter(|(_, r)| r.status == PatternStatus::CodeVersion)
            .map(|(id, r)| (id, r.created_at))
            .collect();
        versions.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let over_cap: std::collections::BTreeSet<String> = versions
            .iter()
            .skip(policy.code_version_limit)
            .map(|(id, _)| (*id).clone())
            .collect();

        for (id, record) in &self.records {
            let age = |anchor: i64| now - anchor;
            let out = match record.status {
                PatternStatus::ResolvedFix => false,
                PatternStatus::ActiveBug => record
                    .resolved_at
                    .is_some_and(|r| age(r) > policy.active_bug_grace_days * SECONDS_PER_DAY),
                PatternStatus::TestResult => {
                    age(record.created_at) > policy.test_result_days * SECONDS_PER_DAY
                }
                PatternStatus::Embedding => {
                    age(record.created_at) > policy.embedding_cache_days * SECONDS_PER_DAY
                }
                PatternStatus::CodeVersion => {
                    over_cap.contains(id)
                        || age(record.created_at) > policy.code_version_days * SECONDS_PER_DAY
                }
            };
            if out {
                evicted.entry(record.status).or_default().push(id.clone());
            }
        }

        for ids in evicted.values() {
            for id in ids {
                self.records.remove(id);
            }
        }
        self.snapshot()?;
        Ok(EvictionReport { evicted, at: now })
    }

    /// Write the current state and log offset to `snapshot.json` so the next
    /// open skips (and the retention pass forgets) everything before it.
    pub fn snapshot(&self) -> Result<()> {
        let log_path = self.dir.join(LOG_FILE);
        let log_offset = match std::fs::metadata(&log_path) {
            Ok(meta) => meta.len(),
            Err(_) => 0,
        };
        let snapshot = Snapshot {
            log_offset,
            records: self.records.values().cloned().collect(),
        };
        let tmp = self.dir.join("snapshot.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&snapshot)?)?;
        std::fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }

    fn append(&self, record: &DebugPattern) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(LOG_FILE))?;
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: i64 = SECONDS_PER_DAY;

    fn pattern(id: &str, status: PatternStatus, created_at: i64) -> DebugPattern {
        DebugPattern::new(id, format!("signature for {id}"), status, created_at)
    }

    fn open_temp() -> (tempfile::TempDir, PdmStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = PdmStore::open(dir.path()).unwrap();
        (dir, store)
    }

    #[test]
    fn stored_record_is_its_own_best_match() {
        let (_dir, mut store) = open_temp();
        store
            .store(
                DebugPattern::new("p1", "redis timestamp precision", PatternStatus::ResolvedFix, 0)
                    .with_paths(["services/session.js"]),
            )
            .unwrap();
        store
            .store(DebugPattern::new("p2", "null pointer in parser", PatternStatus::ResolvedFix, 0))
            .unwrap();
        let probe = Probe::new("redis timestamp precision", 0).with_paths(["services/session.js"]);
        let hits = store.query(&probe, 10);
        assert_eq!(hits[0].0.id, "p1");
        assert!((hits[0].1.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("p", PatternStatus::ActiveBug, 0)).unwrap();
        let err = store.store(pattern("p", PatternStatus::ActiveBug, 5)).unwrap_err();
        assert!(matches!(err, Error::DuplicatePattern(id) if id == "p"));
    }

    #[test]
    fn invariant_violations_are_rejected_before_touching_disk() {
        let (dir, mut store) = open_temp();
        let bad = pattern("p", PatternStatus::ActiveBug, 0).with_confidence(1.2);
        assert!(store.store(bad).is_err());
        assert!(!dir.path().join(LOG_FILE).exists(), "nothing was appended");
    }

    #[test]
    fn reload_replays_every_stored_record() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = PdmStore::open(dir.path()).unwrap();
            for i in 0..1000 {
                store.store(pattern(&format!("p{i:04}"), PatternStatus::ResolvedFix, i)).unwrap();
            }
            store.store(pattern("extra", PatternStatus::ActiveBug, 2000)).unwrap();
        }
        let store = PdmStore::open(dir.path()).unwrap();
        assert_eq!(store.len(), 1001);
        assert_eq!(store.get("extra").unwrap().created_at, 2000);
    }

    #[test]
    fn query_gates_on_semantic_or_pattern_overlap() {
        let (_dir, mut store) = open_temp();
        // Paraphrased prose: low cosine, but the error tokens all appear.
        store
            .store(
                DebugPattern::new("tokens", "ETIMEDOUT redis", PatternStatus::ResolvedFix, 0)
                    .with_tokens(["etimedout", "redis"]),
            )
            .unwrap();
        // High cosine duplicate of the probe wording.
        store
            .store(DebugPattern::new(
                "prose",
                "session cache write fails with a timeout",
                PatternStatus::ResolvedFix,
                0,
            ))
            .unwrap();
        // Unrelated on both axes.
        store
            .store(DebugPattern::new("noise", "css layout overflow", PatternStatus::ResolvedFix, 0))
            .unwrap();

        let probe = Probe::new("session cache write fails with a timeout ETIMEDOUT redis", 0);
        let hits = store.query(&probe, 10);
        let ids: Vec<&str> = hits.iter().map(|(r, _)| r.id.as_str()).collect();
        assert!(ids.contains(&"tokens"), "token gate admits paraphrase: {ids:?}");
        assert!(ids.contains(&"prose"));
        assert!(!ids.contains(&"noise"));
    }

    #[test]
    fn ranking_matches_an_exhaustive_scoring_oracle() {
        let (_dir, mut store) = open_temp();
        for i in 0..20 {
            let r = DebugPattern::new(
                format!("p{i:02}"),
                format!("timeout shard {}", i % 5),
                PatternStatus::ResolvedFix,
                0,
            )
            .with_tokens(["timeout", "shard"])
            .with_paths([format!("svc/{}.rs", i % 3)])
            .with_last_used(i * DAY / 4);
            store.store(r).unwrap();
        }
        let probe = Probe::new("timeout in shard writer", 30 * DAY).with_paths(["svc/1.rs"]);
        let hits = store.query(&probe, 20);

        let mut oracle: Vec<(String, f64)> = store
            .records()
            .map(|r| (r.id.clone(), hybrid_score(r, &probe).total))
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        // All records pass the token gate here, so the orders must agree on
        // every strictly-decreasing prefix.
        assert_eq!(hits.len(), 20);
        for ((record, score), (oracle_id, oracle_total)) in hits.iter().zip(&oracle) {
            assert!((score.total - oracle_total).abs() < 1e-12);
            if (score.total - oracle_total).abs() < 1e-15 {
                // Same total: tie-breaking is tested separately.
                continue;
            }
            assert_eq!(&record.id, oracle_id);
        }
    }

    #[test]
    fn ties_break_by_reuse_then_recency_then_id() {
        let (_dir, mut store) = open_temp();
        let base = |id: &str| {
            DebugPattern::new(id, "identical signature", PatternStatus::ResolvedFix, 0)
        };
        store.store(base("b")).unwrap();
        store.store(base("a")).unwrap();
        let mut reused = base("reused");
        reused.reuse_count = 5;
        store.store(reused).unwrap();

        let hits = store.query(&Probe::new("identical signature", 0), 10);
        let ids: Vec<&str> = hits.iter().map(|(r, _)| r.id.as_str()).collect();
        assert_eq!(ids, vec!["reused", "a", "b"]);
    }

    #[test]
    fn query_leaves_the_store_bytes_untouched() {
        let (dir, mut store) = open_temp();
        store.store(pattern("p", PatternStatus::ResolvedFix, 0)).unwrap();
        let before = std::fs::read(dir.path().join(LOG_FILE)).unwrap();
        let _ = store.query(&Probe::new("signature for p", 50 * DAY), 5);
        let after = std::fs::read(dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(before, after);
        assert!(!dir.path().join(SNAPSHOT_FILE).exists());
    }

    #[test]
    fn reuse_increments_and_rewinds_are_rejected() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("p", PatternStatus::ResolvedFix, 100)).unwrap();
        let updated = store.record_reuse("p", 500).unwrap();
        assert_eq!(updated.reuse_count, 1);
        assert_eq!(updated.last_used, 500);

        let err = store.record_reuse("p", 400).unwrap_err();
        assert!(matches!(err, Error::TimeRegression { .. }));
        let err = store.record_reuse("ghost", 600).unwrap_err();
        assert!(matches!(err, Error::PatternNotFound(_)));

        for i in 0..7 {
            store.record_reuse("p", 500 + i).unwrap();
        }
        assert_eq!(store.get("p").unwrap().reuse_count, 8);
    }

    #[test]
    fn reuse_survives_reload() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = PdmStore::open(dir.path()).unwrap();
            store.store(pattern("p", PatternStatus::ResolvedFix, 0)).unwrap();
            store.record_reuse("p", 9 * DAY).unwrap();
        }
        let store = PdmStore::open(dir.path()).unwrap();
        assert_eq!(store.len(), 1, "replay collapses to the latest state");
        assert_eq!(store.get("p").unwrap().reuse_count, 1);
        assert_eq!(store.get("p").unwrap().last_used, 9 * DAY);
    }

    // ── retention ──────────────────────────────────────────────────────────

    #[test]
    fn resolved_fixes_are_never_evicted() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("fix", PatternStatus::ResolvedFix, 0)).unwrap();
        let ten_years = 3650 * DAY;
        let report = store.apply_retention(ten_years).unwrap();
        assert!(report.is_empty());
        assert!(store.get("fix").is_some());
    }

    #[test]
    fn test_results_roll_off_strictly_after_180_days() {
        // Stagger creation so one garbage-collection pass sees all three
        // boundary ages at once.
        let (_dir, mut store) = open_temp();
        store.store(pattern("t179", PatternStatus::TestResult, 2 * DAY)).unwrap();
        store.store(pattern("t180", PatternStatus::TestResult, DAY)).unwrap();
        store.store(pattern("t181", PatternStatus::TestResult, 0)).unwrap();
        let report = store.apply_retention(181 * DAY).unwrap();
        assert!(report.contains("t181"), "aged 181 days: evicted");
        assert!(!report.contains("t180"), "aged exactly 180 days: retained");
        assert!(!report.contains("t179"), "aged 179 days: retained");
    }

    #[test]
    fn active_bugs_linger_90_days_past_resolution() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("open", PatternStatus::ActiveBug, 0)).unwrap();
        store
            .store(pattern("fresh", PatternStatus::ActiveBug, 0).resolved(100 * DAY))
            .unwrap();
        store
            .store(pattern("stale", PatternStatus::ActiveBug, 0).resolved(2 * DAY))
            .unwrap();
        let report = store.apply_retention(100 * DAY).unwrap();
        assert!(report.contains("stale"), "resolved 98 days ago: evicted");
        assert!(!report.contains("fresh"), "resolved today: retained");
        assert!(!report.contains("open"), "unresolved bugs are permanent");
        let report = store.apply_retention(4000 * DAY).unwrap();
        assert!(!report.contains("open"));
    }

    #[test]
    fn embeddings_roll_off_after_30_days() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("old", PatternStatus::Embedding, 0)).unwrap();
        store.store(pattern("new", PatternStatus::Embedding, 5 * DAY)).unwrap();
        let report = store.apply_retention(31 * DAY).unwrap();
        assert!(report.contains("old"));
        assert!(!report.contains("new"));
    }

    #[test]
    fn code_versions_keep_the_newest_up_to_the_cap() {
        let (_dir, mut store) = open_temp();
        let policy = RetentionPolicy {
            code_version_limit: 3,
            ..Default::default()
        };
        store.set_policy(policy).unwrap();
        for i in 0..5 {
            store.store(pattern(&format!("v{i}"), PatternStatus::CodeVersion, i * DAY)).unwrap();
        }
        let report = store.apply_retention(10 * DAY).unwrap();
        assert!(report.contains("v0") && report.contains("v1"), "{report:?}");
        assert!(store.get("v2").is_some() && store.get("v4").is_some());

        // Age alone also evicts, regardless of rank.
        let (_dir2, mut store2) = open_temp();
        store2.store(pattern("ancient", PatternStatus::CodeVersion, 0)).unwrap();
        let report = store2.apply_retention(731 * DAY).unwrap();
        assert!(report.contains("ancient"));
        let (_dir3, mut store3) = open_temp();
        store3.store(pattern("recent", PatternStatus::CodeVersion, DAY)).unwrap();
        let report = store3.apply_retention(731 * DAY).unwrap();
        assert!(!report.contains("recent"), "730 days old exactly: retained");
    }

    #[test]
    fn retention_is_idempotent_and_survives_reload() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = PdmStore::open(dir.path()).unwrap();
            store.store(pattern("gone", PatternStatus::TestResult, 0)).unwrap();
            store.store(pattern("kept", PatternStatus::ResolvedFix, 0)).unwrap();
            let first = store.apply_retention(200 * DAY).unwrap();
            assert_eq!(first.total(), 1);
            let second = store.apply_retention(200 * DAY).unwrap();
            assert!(second.is_empty(), "re-running evicts nothing new");
        }
        let store = PdmStore::open(dir.path()).unwrap();
        assert!(store.get("gone").is_none(), "eviction survives reload");
        assert!(store.get("kept").is_some());
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn snapshot_plus_log_tail_reload_exactly() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = PdmStore::open(dir.path()).unwrap();
            store.store(pattern("a", PatternStatus::ResolvedFix, 0)).unwrap();
            store.store(pattern("b", PatternStatus::TestResult, 0)).unwrap();
            store.apply_retention(200 * DAY).unwrap(); // evicts b, snapshots
            store.store(pattern("c", PatternStatus::ResolvedFix, 300 * DAY)).unwrap();
        }
        let store = PdmStore::open(dir.path()).unwrap();
        let ids: Vec<&str> = store.records().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c"]);
    }

    #[test]
    fn gc_report_serializes_with_status_keys() {
        let (_dir, mut store) = open_temp();
        store.store(pattern("t", PatternStatus::TestResult, 0)).unwrap();
        let report = store.apply_retention(200 * DAY).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["evicted"]["TestResult"][0], "t");
        assert_eq!(json["at"], 200 * DAY);
    }
}
