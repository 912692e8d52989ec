//! The audit service: verifies proofs, keeps the session registry, and
//! appends audit and violation records.
//!
//! Handlers for distinct sessions run concurrently; events for one session
//! serialize on a per-session lock. Audit decisions are keyed on
//! `(s_id, submitter)` so both endpoints of a session can audit
//! independently, and a duplicate Audit-Request for an already-decided pair
//! is answered with the recorded outcome rather than re-verified.

use crate::records::{AuditRecord, SessionRecord, Violation, INVALID_PROOF_REASON};
use crate::state::{decide, transition, EventKind, SessionState};
use crate::storage::{replay_outcomes, AuditStore, ReplayedOutcome};
use crate::wire::AuditStatus;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use thiserror::Error;
use zkmcp_core::proof::{now_ms, CrsBundle, ProofBundle, ProofError, Verifier, ORACLE_BACKEND_ID};

#[derive(Debug, Error)]
pub enum AspError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("illegal transition: {event:?} in state {state:?}")]
    IllegalTransition { state: SessionState, event: EventKind },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("key bundle uses the insecure oracle backend; refused without --insecure")]
    InsecureBackendRefused,
    #[error(transparent)]
    Proof(ProofError),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
}

/// Inbound events, decoupled from the wire encoding.
#[derive(Debug)]
pub enum Event {
    SessionStart { s_id: String, initiator: String, peer: String },
    AuditRequest { bundle: ProofBundle, submitter: String, filler_count: u64 },
    SessionClose { s_id: String },
}

impl Event {
    pub fn s_id(&self) -> &str {
        match self {
            Event::SessionStart { s_id, .. }
            | Event::SessionClose { s_id } => s_id,
            Event::AuditRequest { bundle, .. } => &bundle.s_id,
        }
    }

    pub fn kind(&self) -> EventKind {
        match self {
            Event::SessionStart { .. } => EventKind::SessionStart,
            Event::AuditRequest { .. } => EventKind::AuditRequest,
            Event::SessionClose { .. } => EventKind::SessionClose,
        }
    }
}

/// Replies the service sends back to the submitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Ack { s_id: String },
    AuditResult { s_id: String, status: AuditStatus, reason: Option<String> },
}

#[derive(Debug, Clone)]
struct Decision {
    verified: bool,
    reason: Option<String>,
    counts: Vec<u64>,
}

struct SessionEntry {
    record: SessionRecord,
    decisions: HashMap<String, Decision>,
}

/// The audit service state.
pub struct Asp {
    verifier: Verifier,
    store: AuditStore,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
}

impl Asp {
    /// Builds the service around a key bundle. An insecure-oracle bundle is
    /// refused unless `allow_insecure` is set.
    pub fn new(crs: &CrsBundle, store: AuditStore, allow_insecure: bool) -> Result<Self, AspError> {
        if crs.backend_id == ORACLE_BACKEND_ID && !allow_insecure {
            return Err(AspError::InsecureBackendRefused);
        }
        let verifier = Verifier::new(crs).map_err(AspError::Proof)?;
        let asp = Self { verifier, store, sessions: Mutex::new(HashMap::new()) };
        asp.recover()?;
        Ok(asp)
    }

    /// Rebuilds the registry and decided-audit map from the persistent logs.
    fn recover(&self) -> Result<(), AspError> {
        let snapshots = self.store.load_sessions()?;
        let outcomes = replay_outcomes(&self.store.load_audits()?, &self.store.load_violations()?);
        let mut sessions = self.sessions.lock().expect("registry lock");
        for record in crate::storage::replay_sessions(&snapshots).into_values() {
            sessions.insert(
                record.s_id.clone(),
                Arc::new(Mutex::new(SessionEntry { record, decisions: HashMap::new() })),
            );
        }
        for ((s_id, submitter), outcome) in outcomes {
            if let Some(entry) = sessions.get(&s_id) {
                entry.lock().expect("session lock").decisions.insert(
                    submitter,
                    Decision {
                        verified: outcome.verified,
                        reason: outcome.reason,
                        counts: outcome.counts.unwrap_or_default(),
                    },
                );
            }
        }
        Ok(())
    }

    /// Dispatches one inbound event.
    pub fn handle(&self, event: Event) -> Result<Reply, AspError> {
        match event {
            Event::SessionStart { s_id, initiator, peer } => {
                self.handle_start(s_id, initiator, peer)
            }
            Event::AuditRequest { bundle, submitter, filler_count } => {
                self.handle_audit(bundle, submitter, filler_count)
            }
            Event::SessionClose { s_id } => self.handle_close(s_id),
        }
    }

    fn handle_start(
        &self,
        s_id: String,
        initiator: String,
        peer: String,
    ) -> Result<Reply, AspError> {
        let entry = {
            let mut sessions = self.sessions.lock().expect("registry lock");
            sessions
                .entry(s_id.clone())
                .or_insert_with(|| {
                    Arc::new(Mutex::new(SessionEntry {
                        record: SessionRecord {
                            s_id: s_id.clone(),
                            initiator: initiator.clone(),
                            peer: peer.clone(),
                            start_time: 0,
                            end_time: None,
                            msg_count: 0,
                            state: SessionState::Init,
                            duration_ms: None,
                        },
                        decisions: HashMap::new(),
                    }))
                })
                .clone()
        };
        let mut entry = entry.lock().expect("session lock");
        let next = transition(entry.record.state, EventKind::SessionStart).map_err(|e| {
            AspError::IllegalTransition { state: e.state, event: e.event }
        })?;
        entry.record.state = next;
        entry.record.initiator = initiator;
        entry.record.peer = peer;
        entry.record.start_time = now_ms();
        entry.record.end_time = None;
        entry.record.duration_ms = None;
        self.store.snapshot_session(&entry.record)?;
        Ok(Reply::Ack { s_id })
    }

    fn handle_audit(
        &self,
        bundle: ProofBundle,
        submitter: String,
        filler_count: u64,
    ) -> Result<Reply, AspError> {
        let s_id = bundle.s_id.clone();
        let entry = self
            .session(&s_id)
            .ok_or_else(|| AspError::UnknownSession(s_id.clone()))?;
        let mut entry = entry.lock().expect("session lock");

        // At-least-once delivery: a decided (s_id, submitter) pair replays
        // its recorded outcome.
        if let Some(decision) = entry.decisions.get(&submitter) {
            return Ok(Reply::AuditResult {
                s_id,
                status: if decision.verified { AuditStatus::Verified } else { AuditStatus::Rejected },
                reason: decision.reason.clone(),
            });
        }

        // Shape is checked before the state moves, so a malformed statement
        // leaves the session untouched.
        let meta = self.verifier.meta();
        let expected = (meta.public_layout.counts, meta.public_layout.hashes);
        if bundle.statement.shape() != expected {
            return Err(AspError::Shape(format!(
                "statement shape {:?}, circuit expects {expected:?}",
                bundle.statement.shape()
            )));
        }

        let prior = entry.record.state;
        let pending = transition(prior, EventKind::AuditRequest).map_err(|e| {
            AspError::IllegalTransition { state: e.state, event: e.event }
        })?;
        entry.record.state = pending;

        // Undecodable proof bytes are an invalid proof, not a server fault.
        let verified = match self.verifier.verify(&bundle) {
            Ok(b) => b,
            Err(ProofError::MalformedProof(_)) => false,
            Err(e) => {
                entry.record.state = prior;
                return Err(AspError::Proof(e));
            }
        };
        entry.record.state = decide(verified);

        let timestamp = now_ms();
        let (status, reason) = if verified {
            entry.record.msg_count = bundle.statement.total_count();
            self.store.append_audit(&AuditRecord {
                s_id: s_id.clone(),
                submitter: submitter.clone(),
                counts: bundle.statement.counts.clone(),
                hashes: bundle
                    .statement
                    .hashes
                    .iter()
                    .map(zkmcp_core::field::fr_to_decimal)
                    .collect(),
                verified_at: timestamp,
                filler_count,
            })?;
            (AuditStatus::Verified, None)
        } else {
            self.store.append_violation(&Violation {
                s_id: s_id.clone(),
                submitter: submitter.clone(),
                flagged_at: timestamp,
                reason: INVALID_PROOF_REASON.to_string(),
            })?;
            (AuditStatus::Rejected, Some(INVALID_PROOF_REASON.to_string()))
        };
        entry.decisions.insert(
            submitter,
            Decision {
                verified,
                reason: reason.clone(),
                counts: bundle.statement.counts.clone(),
            },
        );
        self.store.snapshot_session(&entry.record)?;
        Ok(Reply::AuditResult { s_id, status, reason })
    }

    fn handle_close(&self, s_id: String) -> Result<Reply, AspError> {
        let entry = self
            .session(&s_id)
            .ok_or_else(|| AspError::UnknownSession(s_id.clone()))?;
        let mut entry = entry.lock().expect("session lock");
        transition(entry.record.state, EventKind::SessionClose).map_err(|e| {
            AspError::IllegalTransition { state: e.state, event: e.event }
        })?;
        entry.record.close(now_ms());
        self.store.snapshot_session(&entry.record)?;
        Ok(Reply::Ack { s_id })
    }

    fn session(&self, s_id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        self.sessions.lock().expect("registry lock").get(s_id).cloned()
    }

    pub fn backend_id(&self) -> &str {
        self.verifier.backend_id()
    }

    pub fn store(&self) -> &AuditStore {
        &self.store
    }

    pub fn session_state(&self, s_id: &str) -> Option<SessionState> {
        self.session(s_id).map(|e| e.lock().expect("session lock").record.state)
    }

    pub fn session_record(&self, s_id: &str) -> Option<SessionRecord> {
        self.session(s_id).map(|e| e.lock().expect("session lock").record.clone())
    }

    /// The decided-audit map: `(s_id, submitter) -> outcome`.
    pub fn decided_outcomes(&self) -> BTreeMap<(String, String), ReplayedOutcome> {
        let sessions = self.sessions.lock().expect("registry lock");
        let mut outcomes = BTreeMap::new();
        for (s_id, entry) in sessions.iter() {
            let entry = entry.lock().expect("session lock");
            for (submitter, decision) in &entry.decisions {
                outcomes.insert(
                    (s_id.clone(), submitter.clone()),
                    ReplayedOutcome {
                        verified: decision.verified,
                        counts: decision.verified.then(|| decision.counts.clone()),
                        reason: decision.reason.clone(),
                    },
                );
            }
        }
        outcomes
    }

    /// Test/inspection hook: force a session into a specific state.
    pub fn force_state(&self, s_id: &str, state: SessionState) {
        if let Some(entry) = self.session(s_id) {
            entry.lock().expect("session lock").record.state = state;
        }
    }
}
