//! Agent lifecycle against a live in-process audit service: filler padding,
//! shape guards, retry with backoff, and the non-blocking recording path.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::net::TcpListener;
use std::sync::Arc;
use std::time::{Duration, Instant};
use zkmcp_core::message::canonicalize;
use zkmcp_core::params::{CircuitParams, TypeTable};
use zkmcp_core::proof::{setup, BackendKind, CrsBundle, Prover};
use zkmcp_protocol::storage::AuditStore;
use zkmcp_protocol::{
    Agent, AgentConfig, AgentError, Asp, AuditStatus, Direction, ServerConfig, SessionState,
};

fn oracle_crs(n: usize) -> (CrsBundle, TypeTable) {
    let table = TypeTable::default_table();
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let crs =
        setup(CircuitParams::new(n).unwrap(), &table, BackendKind::InsecureOracle, &mut rng)
            .unwrap();
    (crs, table)
}

// Field order matters: the agent must drop (and drain its outbox) while the
// server is still up, or teardown waits out the full retry budget.
struct Stack {
    agent: Arc<Agent>,
    server: zkmcp_protocol::RunningServer,
    asp: Arc<Asp>,
    _tmp: tempfile::TempDir,
}

fn stack(n: usize) -> Stack {
    let tmp = tempfile::tempdir().unwrap();
    let (crs, table) = oracle_crs(n);
    let store = AuditStore::open(tmp.path()).unwrap();
    let asp = Arc::new(Asp::new(&crs, store, true).unwrap());
    let server = zkmcp_protocol::spawn(Arc::clone(&asp), ServerConfig::default()).unwrap();
    let prover = Arc::new(Prover::new(crs, &table).unwrap());
    let cfg = AgentConfig::new("agent-a", &server.addr().to_string(), table);
    let agent = Arc::new(Agent::new(cfg, prover).unwrap());
    Stack { agent, server, asp, _tmp: tmp }
}

#[test]
fn short_session_is_padded_with_filler_and_verified() {
    let s = stack(8);
    let s_id = s.agent.start_session("agent-b");
    for i in 0..5 {
        let dir = if i % 2 == 0 { Direction::Sent } else { Direction::Received };
        s.agent.record_type(&s_id, "request", dir).unwrap();
    }
    let receipt = s.agent.audit_with_filler(&s_id).unwrap();
    assert_eq!(receipt.filler_count, 3);
    // request ×5, ping ×3 — filler counted honestly.
    assert_eq!(receipt.bundle.statement.counts, vec![5, 0, 0, 0, 3, 0, 0, 0]);

    let (status, _) = s.agent.wait_for_audit(&s_id, Duration::from_secs(5)).unwrap();
    assert_eq!(status, AuditStatus::Verified);
    assert!(s.agent.wait_idle(Duration::from_secs(5)));
    assert_eq!(s.asp.session_state(&s_id), Some(SessionState::SessionClosed));
    let audits = s.asp.store().load_audits().unwrap();
    assert_eq!(audits.len(), 1);
    assert_eq!(audits[0].filler_count, 3);
    assert!(s.agent.dead_letters().is_empty());
}

#[test]
fn exact_sessions_need_no_filler() {
    let s = stack(2);
    let s_id = s.agent.start_session("agent-b");
    s.agent.record_type(&s_id, "request", Direction::Sent).unwrap();
    s.agent.record_type(&s_id, "response", Direction::Received).unwrap();
    let receipt = s.agent.generate_audit(&s_id).unwrap();
    assert_eq!(receipt.filler_count, 0);
    let (status, _) = s.agent.wait_for_audit(&s_id, Duration::from_secs(5)).unwrap();
    assert_eq!(status, AuditStatus::Verified);
}

#[test]
fn wrong_message_count_is_rejected_locally() {
    let s = stack(2);
    let s_id = s.agent.start_session("agent-b");
    s.agent.record_type(&s_id, "ping", Direction::Sent).unwrap();
    assert!(matches!(
        s.agent.generate_audit(&s_id),
        Err(AgentError::WrongMessageCount { expected: 2, got: 1 })
    ));
    // Overfull sessions cannot be audited either, even with filler.
    s.agent.record_type(&s_id, "ping", Direction::Sent).unwrap();
    s.agent.record_type(&s_id, "ping", Direction::Sent).unwrap();
    assert!(matches!(
        s.agent.audit_with_filler(&s_id),
        Err(AgentError::WrongMessageCount { expected: 2, got: 3 })
    ));
}

#[test]
fn recording_after_close_is_refused() {
    let s = stack(1);
    let s_id = s.agent.start_session("agent-b");
    s.agent.record_type(&s_id, "ping", Direction::Sent).unwrap();
    s.agent.generate_audit(&s_id).unwrap();
    assert!(matches!(
        s.agent.record_type(&s_id, "ping", Direction::Sent),
        Err(AgentError::SessionNotActive(_))
    ));
}

#[test]
fn unknown_and_malformed_messages_are_refused_at_ingestion() {
    let s = stack(2);
    let s_id = s.agent.start_session("agent-b");
    let raw = canonicalize(b"mystery", 20).unwrap();
    assert!(matches!(
        s.agent.record_message(&s_id, &raw, Direction::Sent),
        Err(AgentError::UnknownType(_))
    ));
    assert!(matches!(
        s.agent.record_message(&s_id, b"{\"kind\": \"x\"}", Direction::Sent),
        Err(AgentError::Message(_))
    ));
    assert_eq!(s.agent.message_count(&s_id).unwrap(), 0);
}

#[test]
fn two_rapid_sessions_get_distinct_ids() {
    let s = stack(1);
    let a = s.agent.start_session("agent-b");
    let b = s.agent.start_session("agent-b");
    assert_ne!(a, b);
    // Both are live concurrently.
    s.agent.record_type(&a, "ping", Direction::Sent).unwrap();
    s.agent.record_type(&b, "ping", Direction::Sent).unwrap();
}

#[test]
fn events_queue_and_retry_until_the_service_comes_up() {
    // Reserve a port, point the agent at it, and only start the server
    // after the first delivery attempts have failed.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);

    let tmp = tempfile::tempdir().unwrap();
    let (crs, table) = oracle_crs(1);
    let prover = Arc::new(Prover::new(crs.clone(), &table).unwrap());
    let mut cfg = AgentConfig::new("agent-a", &addr.to_string(), table);
    cfg.backoff.initial_ms = 20;
    cfg.backoff.max_elapsed_ms = 10_000;
    let agent = Arc::new(Agent::new(cfg, prover).unwrap());

    let s_id = agent.start_session("agent-b");
    agent.record_type(&s_id, "ping", Direction::Sent).unwrap();
    agent.generate_audit(&s_id).unwrap();

    std::thread::sleep(Duration::from_millis(200));
    let store = AuditStore::open(tmp.path()).unwrap();
    let asp = Arc::new(Asp::new(&crs, store, true).unwrap());
    let config = ServerConfig { listen: addr.to_string(), ..ServerConfig::default() };
    let _server = zkmcp_protocol::spawn(Arc::clone(&asp), config).unwrap();

    let (status, _) = agent.wait_for_audit(&s_id, Duration::from_secs(10)).unwrap();
    assert_eq!(status, AuditStatus::Verified);
    assert!(agent.wait_idle(Duration::from_secs(10)));
    assert!(agent.dead_letters().is_empty());
    assert_eq!(asp.session_state(&s_id), Some(SessionState::SessionClosed));
}

#[test]
fn recording_does_not_accumulate_cost() {
    let s = stack(8);
    // Medians over many sessions: early calls vs late calls in a 512-message
    // burst must stay within an order of magnitude.
    let mut early = Vec::new();
    let mut late = Vec::new();
    for _ in 0..10 {
        let s_id = s.agent.start_session("agent-b");
        let raw = canonicalize(b"ping", 20).unwrap();
        let mut samples = Vec::with_capacity(512);
        for _ in 0..512 {
            let t = Instant::now();
            s.agent.record_message(&s_id, &raw, Direction::Sent).unwrap();
            samples.push(t.elapsed().as_nanos());
        }
        early.extend_from_slice(&samples[..64]);
        late.extend_from_slice(&samples[448..]);
    }
    early.sort_unstable();
    late.sort_unstable();
    let early_median = early[early.len() / 2] as f64;
    let late_median = late[late.len() / 2] as f64;
    assert!(
        late_median < early_median * 10.0,
        "recording cost accumulates: early {early_median}ns late {late_median}ns"
    );
}

#[test]
fn proof_work_is_strictly_post_session_and_recording_is_unaffected() {
    // Two identical scripts; one session audits afterwards, one does not.
    let s = stack(4);
    let script = ["request", "response", "request", "result"];

    let with_audit = s.agent.start_session("agent-b");
    for t in script {
        s.agent.record_type(&with_audit, t, Direction::Sent).unwrap();
    }
    let recording_done = zkmcp_core::proof::now_ms();
    let receipt = s.agent.audit_with_filler(&with_audit).unwrap();

    let without_audit = s.agent.start_session("agent-b");
    for t in script {
        s.agent.record_type(&without_audit, t, Direction::Sent).unwrap();
    }
    s.agent.end_session(&without_audit).unwrap();
    assert_eq!(s.agent.message_count(&without_audit).unwrap(), 0); // buffer cleared

    assert_eq!(receipt.bundle.statement.counts, vec![2, 1, 0, 0, 0, 0, 0, 1]);
    // All proving happened strictly after the last message was recorded.
    assert!(receipt.prove_started_ms >= recording_done);
    assert!(receipt.prove_finished_ms >= receipt.prove_started_ms);
    s.agent.wait_idle(Duration::from_secs(5));
    drop(s.server);
}
