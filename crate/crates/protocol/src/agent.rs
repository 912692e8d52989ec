//! Agent-side session lifecycle: non-blocking message recording during a
//! session, proof generation after it, and at-least-once delivery of
//! protocol events to the audit service.
//!
//! `record_message` does no proving and no network I/O — it parses the type,
//! appends to the session buffer, and returns; per-call cost is independent
//! of how many messages are already buffered. Outbound events go through a
//! background outbox thread that retries with exponential backoff, so a
//! briefly unreachable audit service never blocks communication.

use crate::client;
use crate::state::SessionState;
use crate::wire::{AuditStatus, Envelope};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;
use thiserror::Error;
use zkmcp_core::message::{AuditMessage, MessageError};
use zkmcp_core::params::TypeTable;
use zkmcp_core::proof::{now_ms, ProofBundle, ProofError, Prover};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is not active")]
    SessionNotActive(String),
    #[error(transparent)]
    Message(#[from] MessageError),
    #[error("type {0:?} is not in the table")]
    UnknownType(String),
    #[error("session holds {got} messages, circuit expects {expected}")]
    WrongMessageCount { expected: usize, got: usize },
    #[error("proving failed: {0}")]
    ProveFailure(#[from] ProofError),
    #[error("filler type {0:?} is not in the table")]
    FillerUnavailable(String),
}

/// Whether a recorded message was sent or received by this agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Sent,
    Received,
}

/// One buffered message.
#[derive(Debug, Clone)]
pub struct RecordedMessage {
    pub message: AuditMessage,
    pub direction: Direction,
}

/// Retry policy for outbox delivery.
#[derive(Debug, Clone, Copy)]
pub struct BackoffPolicy {
    pub initial_ms: u64,
    pub factor: f64,
    pub max_ms: u64,
    pub max_elapsed_ms: u64,
}

impl Default for BackoffPolicy {
    fn default() -> Self {
        Self { initial_ms: 50, factor: 2.0, max_ms: 2_000, max_elapsed_ms: 30_000 }
    }
}

impl BackoffPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = (self.initial_ms as f64) * self.factor.powi(attempt as i32);
        Duration::from_millis((ms as u64).min(self.max_ms))
    }
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// This agent's identifier; also the audit submitter id.
    pub id: String,
    /// Audit service address, `host:port`.
    pub asp_addr: String,
    pub table: TypeTable,
    /// Type recorded to fill short sessions up to the circuit size.
    pub filler_type: String,
    pub backoff: BackoffPolicy,
    /// Per-request reply timeout.
    pub submit_timeout: Duration,
}

impl AgentConfig {
    pub fn new(id: &str, asp_addr: &str, table: TypeTable) -> Self {
        Self {
            id: id.to_string(),
            asp_addr: asp_addr.to_string(),
            table,
            filler_type: "ping".to_string(),
            backoff: BackoffPolicy::default(),
            submit_timeout: Duration::from_secs(5),
        }
    }
}

struct SessionBuf {
    peer: String,
    start_time: u64,
    messages: Vec<RecordedMessage>,
    state: SessionState,
}

/// Outcome of one generated audit, with proving timestamps for overhead
/// accounting.
#[derive(Debug, Clone)]
pub struct AuditReceipt {
    pub s_id: String,
    pub bundle: ProofBundle,
    pub filler_count: u64,
    pub prove_started_ms: u64,
    pub prove_finished_ms: u64,
}

/// Terminal delivery failures, kept for inspection.
#[derive(Debug, Clone)]
pub struct DeadLetter {
    pub kind: &'static str,
    pub s_id: String,
    pub error: String,
}

type AuditResults = Arc<Mutex<HashMap<String, (AuditStatus, Option<String>)>>>;

struct Outbox {
    tx: Option<mpsc::Sender<Envelope>>,
    pending: Arc<AtomicUsize>,
    audit_results: AuditResults,
    dead_letters: Arc<Mutex<Vec<DeadLetter>>>,
    worker: Option<std::thread::JoinHandle<()>>,
}

impl Outbox {
    fn start(asp_addr: String, backoff: BackoffPolicy, timeout: Duration) -> Self {
        let (tx, rx) = mpsc::channel::<Envelope>();
        let pending = Arc::new(AtomicUsize::new(0));
        let audit_results = Arc::new(Mutex::new(HashMap::new()));
        let dead_letters = Arc::new(Mutex::new(Vec::new()));
        let worker = {
            let pending = Arc::clone(&pending);
            let audit_results = Arc::clone(&audit_results);
            let dead_letters = Arc::clone(&dead_letters);
            std::thread::spawn(move || {
                for envelope in rx {
                    Self::deliver(
                        &asp_addr,
                        envelope,
                        &backoff,
                        timeout,
                        &audit_results,
                        &dead_letters,
                    );
                    pending.fetch_sub(1, Ordering::SeqCst);
                }
            })
        };
        Self { tx: Some(tx), pending, audit_results, dead_letters, worker: Some(worker) }
    }

    fn enqueue(&self, envelope: Envelope) {
        self.pending.fetch_add(1, Ordering::SeqCst);
        if let Some(tx) = &self.tx {
            if tx.send(envelope).is_err() {
                self.pending.fetch_sub(1, Ordering::SeqCst);
            }
        }
    }

    fn deliver(
        addr: &str,
        envelope: Envelope,
        backoff: &BackoffPolicy,
        timeout: Duration,
        audit_results: &Mutex<HashMap<String, (AuditStatus, Option<String>)>>,
        dead_letters: &Mutex<Vec<DeadLetter>>,
    ) {
        let started = std::time::Instant::now();
        let mut attempt = 0u32;
        loop {
            match client::submit_once(addr, &envelope, timeout) {
                Ok(Envelope::AuditResult { s_id, status, reason }) => {
                    audit_results.lock().expect("results lock").insert(s_id, (status, reason));
                    return;
                }
                Ok(Envelope::Ack { .. }) => return,
                Ok(Envelope::Error { s_id, code, message }) => {
                    // A retried start/close answered with illegal_transition
                    // means an earlier attempt was already applied.
                    let benign = code == "illegal_transition"
                        && matches!(
                            envelope,
                            Envelope::SessionStart { .. } | Envelope::SessionClose { .. }
                        );
                    if !benign {
                        dead_letters.lock().expect("dead letter lock").push(DeadLetter {
                            kind: envelope.kind(),
                            s_id,
                            error: format!("{code}: {message}"),
                        });
                    }
                    return;
                }
                Ok(other) => {
                    dead_letters.lock().expect("dead letter lock").push(DeadLetter {
                        kind: envelope.kind(),
                        s_id: other.s_id().to_string(),
                        error: format!("unexpected reply kind {}", other.kind()),
                    });
                    return;
                }
                Err(err) => {
                    if started.elapsed().as_millis() as u64 >= backoff.max_elapsed_ms {
                        dead_letters.lock().expect("dead letter lock").push(DeadLetter {
                            kind: envelope.kind(),
                            s_id: envelope.s_id().to_string(),
                            error: err.to_string(),
                        });
                        return;
                    }
                    log::debug!("delivery attempt {attempt} failed: {err}; backing off");
                    std::thread::sleep(backoff.delay(attempt));
                    attempt = attempt.saturating_add(1);
                }
            }
        }
    }
}

impl Drop for Outbox {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

/// One agent endpoint: session buffers plus a prover.
pub struct Agent {
    cfg: AgentConfig,
    prover: Arc<Prover>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionBuf>>>>,
    outbox: Outbox,
}

impl Agent {
    pub fn new(cfg: AgentConfig, prover: Arc<Prover>) -> Result<Self, AgentError> {
        if !cfg.table.contains(cfg.filler_type.as_bytes()) {
            return Err(AgentError::FillerUnavailable(cfg.filler_type.clone()));
        }
        let outbox = Outbox::start(cfg.asp_addr.clone(), cfg.backoff, cfg.submit_timeout);
        Ok(Self { cfg, prover, sessions: Mutex::new(HashMap::new()), outbox })
    }

    pub fn id(&self) -> &str {
        &self.cfg.id
    }

    pub fn circuit_n(&self) -> usize {
        self.prover.circuit().params.n
    }

    /// Opens a session with a peer: a unique session id is minted, the
    /// buffer is created empty, and Session-Start is queued for the audit
    /// service. An unreachable service defers delivery, never the session.
    pub fn start_session(&self, peer: &str) -> String {
        let suffix = rand::thread_rng().next_u64();
        let start_time = now_ms();
        let s_id = format!("{}:{}:{}:{:016x}", self.cfg.id, peer, start_time, suffix);
        let buf = SessionBuf {
            peer: peer.to_string(),
            start_time,
            messages: Vec::with_capacity(self.circuit_n()),
            state: SessionState::SessionActive,
        };
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(s_id.clone(), Arc::new(Mutex::new(buf)));
        self.outbox.enqueue(Envelope::SessionStart {
            s_id: s_id.clone(),
            initiator: self.cfg.id.clone(),
            peer: peer.to_string(),
        });
        s_id
    }

    /// Records one exchanged message: type extracted, appended to the
    /// buffer, counter bumped. No proving work, no network I/O.
    pub fn record_message(
        &self,
        s_id: &str,
        raw: &[u8],
        direction: Direction,
    ) -> Result<(), AgentError> {
        let table = &self.cfg.table;
        let params = self.prover.circuit().params;
        let buf = self.session(s_id)?;
        let mut buf = buf.lock().expect("session lock");
        if buf.state != SessionState::SessionActive {
            return Err(AgentError::SessionNotActive(s_id.to_string()));
        }
        let message = AuditMessage::from_raw(raw, params.max_json, params.max_type, now_ms())?;
        if !table.contains(&message.type_string) {
            return Err(AgentError::UnknownType(
                String::from_utf8_lossy(&message.type_string).into_owned(),
            ));
        }
        buf.messages.push(RecordedMessage { message, direction });
        Ok(())
    }

    /// Convenience: canonicalize a type identifier and record it.
    pub fn record_type(
        &self,
        s_id: &str,
        type_string: &str,
        direction: Direction,
    ) -> Result<(), AgentError> {
        let raw =
            zkmcp_core::message::canonicalize(type_string.as_bytes(), self.cfg.table.max_type())?;
        self.record_message(s_id, &raw, direction)
    }

    pub fn message_count(&self, s_id: &str) -> Result<usize, AgentError> {
        Ok(self.session(s_id)?.lock().expect("session lock").messages.len())
    }

    /// Builds the witness and statement from the buffer, proves, queues
    /// Audit-Request then Session-Close, and clears the buffer. The buffer
    /// must hold exactly the circuit's message count.
    pub fn generate_audit(&self, s_id: &str) -> Result<AuditReceipt, AgentError> {
        self.generate_audit_inner(s_id, 0)
    }

    /// Like [`Agent::generate_audit`], but first records explicit filler
    /// messages (of the configured filler type) to reach the circuit size.
    /// Filler is recorded through the normal path and counted honestly.
    pub fn audit_with_filler(&self, s_id: &str) -> Result<AuditReceipt, AgentError> {
        let n = self.circuit_n();
        let have = self.message_count(s_id)?;
        if have > n {
            return Err(AgentError::WrongMessageCount { expected: n, got: have });
        }
        let filler = (n - have) as u64;
        let filler_type = self.cfg.filler_type.clone();
        for _ in 0..(n - have) {
            self.record_type(s_id, &filler_type, Direction::Sent)?;
        }
        self.generate_audit_inner(s_id, filler)
    }

    fn generate_audit_inner(&self, s_id: &str, filler_count: u64) -> Result<AuditReceipt, AgentError> {
        let n = self.circuit_n();
        // Snapshot and close the buffer under the lock; prove outside it so
        // other sessions keep recording.
        let messages: Vec<AuditMessage> = {
            let buf = self.session(s_id)?;
            let mut buf = buf.lock().expect("session lock");
            if buf.state != SessionState::SessionActive {
                return Err(AgentError::SessionNotActive(s_id.to_string()));
            }
            if buf.messages.len() != n {
                return Err(AgentError::WrongMessageCount { expected: n, got: buf.messages.len() });
            }
            buf.state = SessionState::SessionClosed;
            let messages = buf.messages.iter().map(|m| m.message.clone()).collect();
            buf.messages = Vec::new();
            messages
        };
        let prove_started_ms = now_ms();
        let bundle =
            self.prover.prove_messages(&messages, s_id, &mut rand::thread_rng())?;
        let prove_finished_ms = now_ms();
        self.outbox.enqueue(Envelope::AuditRequest {
            s_id: s_id.to_string(),
            statement: bundle.statement.clone(),
            proof: bundle.proof.clone(),
            submitter: self.cfg.id.clone(),
            filler_count,
        });
        self.outbox.enqueue(Envelope::SessionClose { s_id: s_id.to_string() });
        Ok(AuditReceipt {
            s_id: s_id.to_string(),
            bundle,
            filler_count,
            prove_started_ms,
            prove_finished_ms,
        })
    }

    /// Closes a session without auditing it.
    pub fn end_session(&self, s_id: &str) -> Result<(), AgentError> {
        let buf = self.session(s_id)?;
        let mut buf = buf.lock().expect("session lock");
        if buf.state != SessionState::SessionActive {
            return Err(AgentError::SessionNotActive(s_id.to_string()));
        }
        buf.state = SessionState::SessionClosed;
        buf.messages = Vec::new();
        self.outbox.enqueue(Envelope::SessionClose { s_id: s_id.to_string() });
        Ok(())
    }

    /// Audit (with filler) on a background thread.
    pub fn spawn_audit_with_filler(
        self: &Arc<Self>,
        s_id: String,
    ) -> std::thread::JoinHandle<Result<AuditReceipt, AgentError>> {
        let agent = Arc::clone(self);
        std::thread::spawn(move || agent.audit_with_filler(&s_id))
    }

    /// Waits until every queued envelope has been delivered or dead-lettered.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = std::time::Instant::now() + timeout;
        while self.outbox.pending.load(Ordering::SeqCst) > 0 {
            if std::time::Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        true
    }

    /// The audit result the service reported for a session, if delivered.
    pub fn audit_result(&self, s_id: &str) -> Option<(AuditStatus, Option<String>)> {
        self.outbox.audit_results.lock().expect("results lock").get(s_id).cloned()
    }

    /// Waits for an audit result to arrive.
    pub fn wait_for_audit(
        &self,
        s_id: &str,
        timeout: Duration,
    ) -> Option<(AuditStatus, Option<String>)> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            if let Some(result) = self.audit_result(s_id) {
                return Some(result);
            }
            if std::time::Instant::now() >= deadline {
                return None;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    pub fn dead_letters(&self) -> Vec<DeadLetter> {
        self.outbox.dead_letters.lock().expect("dead letter lock").clone()
    }

    /// Session metadata (peer, start time) for reporting.
    pub fn session_info(&self, s_id: &str) -> Result<(String, u64), AgentError> {
        let buf = self.session(s_id)?;
        let buf = buf.lock().expect("session lock");
        Ok((buf.peer.clone(), buf.start_time))
    }

    fn session(&self, s_id: &str) -> Result<Arc<Mutex<SessionBuf>>, AgentError> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(s_id)
            .cloned()
            .ok_or_else(|| AgentError::UnknownSession(s_id.to_string()))
    }
}
