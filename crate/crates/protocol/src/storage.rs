//! Append-only JSON-lines persistence.
//!
//! Three files under one data directory: `audit_db.jsonl` (one
//! [`AuditRecord`] per line), `violations.jsonl`, and `sessions.jsonl`
//! (session registry snapshots, one per state change; the last line per
//! session wins on replay). Appends are a single write under a lock,
//! followed by a flush, so concurrent handlers never interleave lines.

use crate::records::{AuditRecord, SessionRecord, Violation};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

pub const AUDIT_DB_FILE: &str = "audit_db.jsonl";
pub const VIOLATIONS_FILE: &str = "violations.jsonl";
pub const SESSIONS_FILE: &str = "sessions.jsonl";

/// One append-only JSON-lines file.
pub struct JsonlStore {
    path: PathBuf,
    file: Mutex<File>,
}

impl JsonlStore {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append<T: Serialize>(&self, record: &T) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().expect("store lock poisoned");
        file.write_all(&line)?;
        file.flush()
    }
}

/// Reads every record of a JSON-lines file. Missing files read as empty.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(records)
}

/// The audit service's three persistent logs.
pub struct AuditStore {
    dir: PathBuf,
    audits: JsonlStore,
    violations: JsonlStore,
    sessions: JsonlStore,
}

impl AuditStore {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            audits: JsonlStore::open(&dir.join(AUDIT_DB_FILE))?,
            violations: JsonlStore::open(&dir.join(VIOLATIONS_FILE))?,
            sessions: JsonlStore::open(&dir.join(SESSIONS_FILE))?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append_audit(&self, record: &AuditRecord) -> std::io::Result<()> {
        self.audits.append(record)
    }

    pub fn append_violation(&self, violation: &Violation) -> std::io::Result<()> {
        self.violations.append(violation)
    }

    pub fn snapshot_session(&self, record: &SessionRecord) -> std::io::Result<()> {
        self.sessions.append(record)
    }

    pub fn load_audits(&self) -> std::io::Result<Vec<AuditRecord>> {
        load_jsonl(&self.dir.join(AUDIT_DB_FILE))
    }

    pub fn load_violations(&self) -> std::io::Result<Vec<Violation>> {
        load_jsonl(&self.dir.join(VIOLATIONS_FILE))
    }

    pub fn load_sessions(&self) -> std::io::Result<Vec<SessionRecord>> {
        load_jsonl(&self.dir.join(SESSIONS_FILE))
    }
}

/// Outcome of one decided audit, reconstructed from the logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayedOutcome {
    pub verified: bool,
    pub counts: Option<Vec<u64>>,
    pub reason: Option<String>,
}

/// Rebuilds the decided-audit map from the audit and violation logs alone.
/// Keyed on (s_id, submitter); a session audited by both endpoints yields
/// two entries.
pub fn replay_outcomes(
    audits: &[AuditRecord],
    violations: &[Violation],
) -> BTreeMap<(String, String), ReplayedOutcome> {
    let mut outcomes = BTreeMap::new();
    for audit in audits {
        outcomes.insert(
            (audit.s_id.clone(), audit.submitter.clone()),
            ReplayedOutcome { verified: true, counts: Some(audit.counts.clone()), reason: None },
        );
    }
    for violation in violations {
        outcomes.insert(
            (violation.s_id.clone(), violation.submitter.clone()),
            ReplayedOutcome { verified: false, counts: None, reason: Some(violation.reason.clone()) },
        );
    }
    outcomes
}

/// Rebuilds the final session registry from snapshots: last line per s_id.
pub fn replay_sessions(snapshots: &[SessionRecord]) -> BTreeMap<String, SessionRecord> {
    let mut registry = BTreeMap::new();
    for snap in snapshots {
        registry.insert(snap.s_id.clone(), snap.clone());
    }
    registry
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SessionState;
    use std::sync::Arc;

    fn sample_audit(s_id: &str, submitter: &str) -> AuditRecord {
        AuditRecord {
            s_id: s_id.into(),
            submitter: submitter.into(),
            counts: vec![1, 0, 0, 0, 0, 0, 0, 0],
            hashes: vec!["42".into()],
            verified_at: 1,
            filler_count: 0,
        }
    }

    #[test]
    fn append_and_load_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let store = AuditStore::open(tmp.path()).unwrap();
        store.append_audit(&sample_audit("s1", "a")).unwrap();
        store.append_audit(&sample_audit("s2", "a")).unwrap();
        store
            .append_violation(&Violation {
                s_id: "s3".into(),
                submitter: "b".into(),
                flagged_at: 2,
                reason: "Invalid proof".into(),
            })
            .unwrap();
        assert_eq!(store.load_audits().unwrap().len(), 2);
        assert_eq!(store.load_violations().unwrap().len(), 1);
    }

    #[test]
    fn replay_reconstructs_outcomes() {
        let audits = vec![sample_audit("s1", "a"), sample_audit("s2", "b")];
        let violations = vec![Violation {
            s_id: "s3".into(),
            submitter: "a".into(),
            flagged_at: 9,
            reason: "Invalid proof".into(),
        }];
        let outcomes = replay_outcomes(&audits, &violations);
        assert_eq!(outcomes.len(), 3);
        assert!(outcomes[&("s1".to_string(), "a".to_string())].verified);
        assert!(!outcomes[&("s3".to_string(), "a".to_string())].verified);
    }

    #[test]
    fn session_replay_takes_last_snapshot() {
        let mut first = SessionRecord {
            s_id: "s1".into(),
            initiator: "a".into(),
            peer: "b".into(),
            start_time: 10,
            end_time: None,
            msg_count: 0,
            state: SessionState::SessionActive,
            duration_ms: None,
        };
        let snapshots = vec![first.clone(), {
            first.close(25);
            first.clone()
        }];
        let registry = replay_sessions(&snapshots);
        assert_eq!(registry["s1"].state, SessionState::SessionClosed);
        assert_eq!(registry["s1"].duration_ms, Some(15));
    }

    #[test]
    fn concurrent_appends_keep_line_integrity() {
        let tmp = tempfile::tempdir().unwrap();
        let store = Arc::new(AuditStore::open(tmp.path()).unwrap());
        let mut handles = Vec::new();
        for t in 0..8 {
            let store = Arc::clone(&store);
            handles.push(std::thread::spawn(move || {
                for i in 0..50 {
                    store.append_audit(&sample_audit(&format!("s{t}-{i}"), "a")).unwrap();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let audits = store.load_audits().unwrap();
        assert_eq!(audits.len(), 400);
    }
}
