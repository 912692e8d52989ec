//! Persisted protocol records.

use crate::state::SessionState;
use serde::{Deserialize, Serialize};

/// The reason string recorded for every rejected audit.
pub const INVALID_PROOF_REASON: &str = "Invalid proof";

/// One communication session as the audit service sees it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub s_id: String,
    pub initiator: String,
    pub peer: String,
    pub start_time: u64,
    pub end_time: Option<u64>,
    /// Message count, learned from a verified audit statement.
    pub msg_count: u64,
    pub state: SessionState,
    /// `end_time - start_time`, present once closed.
    pub duration_ms: Option<u64>,
}

impl SessionRecord {
    pub fn close(&mut self, end_time: u64) {
        self.end_time = Some(end_time);
        self.duration_ms = Some(end_time.saturating_sub(self.start_time));
        self.state = SessionState::SessionClosed;
    }
}

/// One verified audit, appended to the audit database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub s_id: String,
    pub submitter: String,
    pub counts: Vec<u64>,
    /// Message digests as decimal strings.
    pub hashes: Vec<String>,
    pub verified_at: u64,
    /// Explicit filler messages the submitter recorded to reach the circuit
    /// size; they are counted honestly in `counts`.
    pub filler_count: u64,
}

/// One flagged violation, appended to the violation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub s_id: String,
    pub submitter: String,
    pub flagged_at: u64,
    pub reason: String,
}

/// Summary statistics computed when a session closes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStats {
    pub s_id: String,
    pub duration_ms: u64,
    pub msg_count: u64,
    pub audit_status: AuditStatusSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatusSummary {
    Verified,
    Rejected,
    None,
}
