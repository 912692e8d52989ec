//! Acceptance suite: one test per release criterion, tolerances pinned in
//! code. Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion PASS lines; the harness itself prints one ok/FAILED line
//! per criterion either way.
//!
//! CPU-heavy criteria serialize on a shared lock so timing-sensitive
//! assertions are not distorted by sibling tests.

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use std::sync::Mutex;
use std::time::{Duration, Instant};
use zkmcp_bench::{bench_circuit, paired_overhead, BenchConfig, LatencyProfile, SimulateConfig};
use zkmcp_core::circuit::{build_circuit, synthesize_witness, PublicStatement};
use zkmcp_core::field::Fr;
use zkmcp_core::message::{count_types, AuditMessage};
use zkmcp_core::params::{CircuitParams, TypeTable};
use zkmcp_core::privacy::{find_leaks, find_leaks_masked};
use zkmcp_core::proof::{setup, BackendKind, ProofBundle, ProofError, Prover, Verifier};
use zkmcp_protocol::storage::{replay_outcomes, AuditStore};
use zkmcp_protocol::wire::WIRE_SCHEMA_TOKENS;
use zkmcp_protocol::{
    transition, Asp, AspError, AuditStatus, Envelope, Event, EventKind, Reply, SessionState,
};

/// Serializes the CPU/timing-heavy criteria.
static TIMING_LOCK: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    TIMING_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn rng(tag: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(0xACC0_0000 ^ tag)
}

fn random_session(rng: &mut impl Rng, n: usize, table: &TypeTable) -> Vec<AuditMessage> {
    (0..n)
        .map(|i| {
            let t = table.entry(rng.gen_range(0..table.len()));
            AuditMessage::from_type(t.as_bytes(), 20, i as u64).unwrap()
        })
        .collect()
}

/// Completeness: for n ∈ {1, 2, 4, 8}, 100 randomly scripted honest sessions
/// each produce a proof that verifies; zero failures; suite under 15 minutes.
#[test]
fn acceptance_completeness() {
    let _guard = lock();
    let started = Instant::now();
    let table = TypeTable::default_table();
    let mut rng = rng(1);
    const SESSIONS_PER_N: usize = 100;

    for n in [1usize, 2, 4, 8] {
        let params = CircuitParams::new(n).unwrap();
        let crs = setup(params, &table, BackendKind::Groth16, &mut rng).unwrap();
        let prover = Prover::new(crs.clone(), &table).unwrap();
        let verifier = Verifier::new(&crs).unwrap();
        let mut verified = 0usize;
        for s in 0..SESSIONS_PER_N {
            let msgs = random_session(&mut rng, n, &table);
            let bundle = prover.prove_messages(&msgs, &format!("comp-{n}-{s}"), &mut rng).unwrap();
            assert!(
                verifier.verify(&bundle).unwrap(),
                "honest session {s} at n={n} failed to verify"
            );
            verified += 1;
        }
        assert_eq!(verified, SESSIONS_PER_N);
        println!("  completeness n={n}: {verified}/{SESSIONS_PER_N} verified");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(900),
        "completeness suite took {elapsed:?}, budget is 15 min"
    );
    println!("ACCEPTANCE completeness: PASS ({elapsed:?})");
}

/// Oracle equivalence: over 100 random n=8 sessions, statement counts equal
/// the plaintext counting oracle exactly, and counts always sum to 8.
#[test]
fn acceptance_oracle_equivalence() {
    let table = TypeTable::default_table();
    let cs = build_circuit(CircuitParams::new(8).unwrap(), &table).unwrap();
    let mut rng = rng(2);
    for _ in 0..100 {
        let msgs = random_session(&mut rng, 8, &table);
        let (_, statement) = synthesize_witness(&cs, &msgs).unwrap();
        assert_eq!(statement.counts, count_types(&msgs, &table).unwrap());
        assert_eq!(statement.total_count(), 8);
    }
    println!("ACCEPTANCE oracle-equivalence: PASS");
}

/// Soundness smoke suite: 100 perturbation trials (count ±1, count swap,
/// hash replacement, proof-byte flip) all rejected; zero false accepts.
#[test]
fn acceptance_soundness_smoke() {
    let _guard = lock();
    let table = TypeTable::default_table();
    let mut rng = rng(3);
    let n = 4usize;
    let crs = setup(CircuitParams::new(n).unwrap(), &table, BackendKind::Groth16, &mut rng)
        .unwrap();
    let prover = Prover::new(crs.clone(), &table).unwrap();
    let verifier = Verifier::new(&crs).unwrap();

    let bases: Vec<ProofBundle> = (0..10)
        .map(|s| {
            let msgs = random_session(&mut rng, n, &table);
            prover.prove_messages(&msgs, &format!("snd-{s}"), &mut rng).unwrap()
        })
        .collect();
    for base in &bases {
        assert!(verifier.verify(base).unwrap());
    }

    let mut rejected = 0usize;
    for trial in 0..100 {
        let mut bundle = bases[trial % bases.len()].clone();
        match trial % 4 {
            0 => {
                // Flip one count by ±1.
                let j = rng.gen_range(0..bundle.statement.counts.len());
                if bundle.statement.counts[j] == 0 || rng.gen_bool(0.5) {
                    bundle.statement.counts[j] += 1;
                } else {
                    bundle.statement.counts[j] -= 1;
                }
            }
            1 => {
                // Swap two unequal counts.
                let counts = &mut bundle.statement.counts;
                let (mut a, mut b) = (0usize, 1usize);
                'search: for i in 0..counts.len() {
                    for j in (i + 1)..counts.len() {
                        if counts[i] != counts[j] {
                            a = i;
                            b = j;
                            break 'search;
                        }
                    }
                }
                assert_ne!(counts[a], counts[b], "session with all-equal counts is impossible");
                counts.swap(a, b);
            }
            2 => {
                // Replace one hash with a random field element.
                let j = rng.gen_range(0..bundle.statement.hashes.len());
                bundle.statement.hashes[j] = Fr::from(rng.gen::<u64>()) * Fr::from(rng.gen::<u64>());
            }
            _ => {
                // Flip one proof byte.
                let j = rng.gen_range(0..bundle.proof.payload.len());
                bundle.proof.payload[j] ^= rng.gen_range(1u8..=255);
            }
        }
        match verifier.verify(&bundle) {
            Ok(false) | Err(ProofError::MalformedProof(_)) => rejected += 1,
            Ok(true) => panic!("perturbation trial {trial} falsely accepted"),
            Err(e) => panic!("perturbation trial {trial} errored unexpectedly: {e}"),
        }
    }
    assert_eq!(rejected, 100);
    println!("ACCEPTANCE soundness-smoke: PASS (100/100 rejected)");
}

/// Statement privacy scan: serialized audit_request traffic for 50 sessions
/// contains no byte substring (length ≥ 4) of any raw message outside the
/// fixed schema tokens, and the decoded proof payloads contain none at all.
#[test]
fn acceptance_statement_privacy_scan() {
    let _guard = lock();
    let table = TypeTable::default_table();
    let mut rng = rng(4);
    let n = 8usize;
    let crs = setup(CircuitParams::new(n).unwrap(), &table, BackendKind::Groth16, &mut rng)
        .unwrap();
    let prover = Prover::new(crs, &table).unwrap();

    let mut scanned_windows = 0usize;
    for s in 0..50 {
        let msgs = random_session(&mut rng, n, &table);
        let bundle = prover.prove_messages(&msgs, &format!("priv-{s}"), &mut rng).unwrap();
        // The exact bytes the client writes on the socket.
        let line = zkmcp_protocol::encode(&Envelope::AuditRequest {
            s_id: bundle.s_id.clone(),
            statement: bundle.statement.clone(),
            proof: bundle.proof.clone(),
            submitter: "agent-a".into(),
            filler_count: 0,
        });
        let raw: Vec<&[u8]> = msgs.iter().map(|m| m.raw.as_slice()).collect();
        scanned_windows += raw.iter().map(|r| r.len().saturating_sub(3)).sum::<usize>();

        let leaks = find_leaks_masked(line.as_bytes(), &raw, WIRE_SCHEMA_TOKENS);
        assert!(leaks.is_empty(), "session {s} traffic leaks message bytes: {leaks:?}");
        // The decoded proof payload, scanned with no carve-outs at all.
        let payload_leaks = find_leaks(&bundle.proof.payload, &raw, 4);
        assert!(payload_leaks.is_empty(), "session {s} proof payload leaks: {payload_leaks:?}");
        // The traffic still carries the public statement.
        assert!(line.contains("\"counts\"") && line.contains("\"hashes\""));
    }
    println!("ACCEPTANCE statement-privacy-scan: PASS (50 sessions, {scanned_windows} windows)");
}

/// Scalability shape: constraints(2n)/constraints(n) ∈ [1.8, 2.2] for
/// n ∈ {4..128}; prove time non-decreasing within 10% noise;
/// verify_ms(64)/verify_ms(1) < 8.
#[test]
fn acceptance_scalability_shape() {
    let _guard = lock();
    let cfg = BenchConfig {
        seed: 0xACC5,
        ..BenchConfig::new(vec![1, 2, 4, 8, 16, 32, 64, 128], BackendKind::Groth16)
    };
    let report = bench_circuit(&cfg).unwrap();
    assert!(report.skipped.is_empty(), "no row may be skipped: {:?}", report.skipped);
    let rows = &report.rows;
    assert_eq!(rows.len(), 8);

    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.n >= 4 {
            let ratio = b.constraints as f64 / a.constraints as f64;
            assert!(
                (1.8..=2.2).contains(&ratio),
                "constraints({})/constraints({}) = {ratio:.3} outside [1.8, 2.2]",
                b.n,
                a.n
            );
        }
        assert!(
            b.prove_ms >= a.prove_ms * 0.9,
            "prove time decreased beyond noise: {:.1} ms at n={} vs {:.1} ms at n={}",
            b.prove_ms,
            b.n,
            a.prove_ms,
            a.n
        );
    }

    let verify_1 = rows.iter().find(|r| r.n == 1).unwrap().verify_ms;
    let verify_64 = rows.iter().find(|r| r.n == 64).unwrap().verify_ms;
    let ratio = verify_64 / verify_1;
    assert!(ratio < 8.0, "verify_ms(64)/verify_ms(1) = {ratio:.2}, must stay below 8");
    println!(
        "ACCEPTANCE scalability-shape: PASS (verify 64/1 ratio {ratio:.2}, {} rows)",
        rows.len()
    );
}

/// Overhead: with 200 ms injected per-message latency and n = 8, paired runs
/// show per-message communication-path overhead within 5%, and every piece
/// of proof work starts after session shutdown.
#[test]
fn acceptance_overhead() {
    let _guard = lock();
    let table = TypeTable::default_table();
    let mut rng = rng(6);
    let crs = setup(CircuitParams::new(8).unwrap(), &table, BackendKind::Groth16, &mut rng)
        .unwrap();
    let cfg = SimulateConfig::new(4, 8, LatencyProfile::fixed_ms(200), true);
    let (report, baseline, audited) = paired_overhead(&cfg, &crs, &table).unwrap();

    let base_per_msg = baseline.mean_per_message_ms();
    let audited_per_msg = audited.mean_per_message_ms();
    let per_message_overhead_pct = (audited_per_msg - base_per_msg) / base_per_msg * 100.0;
    assert!(
        per_message_overhead_pct.abs() < 5.0,
        "per-message communication overhead {per_message_overhead_pct:.3}% exceeds 5% \
         (baseline {base_per_msg:.2} ms, audited {audited_per_msg:.2} ms)"
    );
    for session in &audited.sessions {
        assert_eq!(session.verified, Some(true), "session {} not verified", session.s_id);
        assert!(
            session.prove_after_shutdown,
            "session {} proved before shutdown",
            session.s_id
        );
    }
    let row = &report.rows[0];
    println!(
        "ACCEPTANCE overhead: PASS (per-message {per_message_overhead_pct:+.3}%, \
         session-level {0:+.3}%, prove {1:.0} ms async)",
        row.overhead_pct, row.prove_ms
    );
}

/// State-machine exhaustion: all 6 states × 3 inbound event kinds behave
/// exactly per the transition table, at both the pure-function level and the
/// service-handler level; a decided Audit-Request replays idempotently.
#[test]
fn acceptance_state_machine_exhaustion() {
    use EventKind::*;
    use SessionState::*;
    let legal = [
        (Init, SessionStart),
        (SessionClosed, SessionStart),
        (SessionActive, AuditRequest),
        (SessionClosed, AuditRequest),
        (SessionActive, SessionClose),
        (AuditVerified, SessionClose),
        (AuditRejected, SessionClose),
    ];

    // Pure transition function, all 18 pairs.
    for state in SessionState::ALL {
        for event in EventKind::ALL {
            let outcome = transition(state, event);
            assert_eq!(
                outcome.is_ok(),
                legal.contains(&(state, event)),
                "({state:?}, {event:?}) transition table mismatch"
            );
        }
    }

    // Service-handler level: place a registered session in every state and
    // fire every event kind against it.
    let tmp = tempfile::tempdir().unwrap();
    let table = TypeTable::default_table();
    let mut rng = rng(7);
    let crs = setup(CircuitParams::new(1).unwrap(), &table, BackendKind::InsecureOracle, &mut rng)
        .unwrap();
    let store = AuditStore::open(tmp.path()).unwrap();
    let asp = Asp::new(&crs, store, true).unwrap();
    let prover = Prover::new(crs, &table).unwrap();

    let mut case = 0usize;
    for state in SessionState::ALL {
        for event_kind in EventKind::ALL {
            case += 1;
            let s_id = format!("sm-{case}");
            asp.handle(Event::SessionStart {
                s_id: s_id.clone(),
                initiator: "a".into(),
                peer: "b".into(),
            })
            .unwrap();
            asp.force_state(&s_id, state);

            let event = match event_kind {
                SessionStart => Event::SessionStart {
                    s_id: s_id.clone(),
                    initiator: "a".into(),
                    peer: "b".into(),
                },
                AuditRequest => {
                    let msg = AuditMessage::from_type(b"ping", 20, 0).unwrap();
                    let bundle = prover.prove_messages(&[msg], &s_id, &mut rng).unwrap();
                    Event::AuditRequest { bundle, submitter: "a".into(), filler_count: 0 }
                }
                SessionClose => Event::SessionClose { s_id: s_id.clone() },
            };
            let outcome = asp.handle(event);
            if legal.contains(&(state, event_kind)) {
                assert!(outcome.is_ok(), "handler rejected legal ({state:?}, {event_kind:?})");
            } else {
                assert!(
                    matches!(outcome, Err(AspError::IllegalTransition { state: s, event: e })
                        if s == state && e == event_kind),
                    "handler must raise IllegalTransition for ({state:?}, {event_kind:?})"
                );
                assert_eq!(asp.session_state(&s_id), Some(state), "illegal event mutated state");
            }
        }
    }

    // Idempotent replay of a decided Audit-Request, for both outcomes.
    for (tag, tamper) in [("ok", false), ("bad", true)] {
        let s_id = format!("replay-{tag}");
        asp.handle(Event::SessionStart { s_id: s_id.clone(), initiator: "a".into(), peer: "b".into() })
            .unwrap();
        let msg = AuditMessage::from_type(b"ping", 20, 0).unwrap();
        let mut bundle = prover.prove_messages(&[msg], &s_id, &mut rng).unwrap();
        if tamper {
            bundle.statement.counts[4] -= 1;
            bundle.statement.counts[0] += 1;
        }
        let first = asp
            .handle(Event::AuditRequest { bundle: bundle.clone(), submitter: "a".into(), filler_count: 0 })
            .unwrap();
        let replay = asp
            .handle(Event::AuditRequest { bundle, submitter: "a".into(), filler_count: 0 })
            .unwrap();
        assert_eq!(first, replay, "replay of a decided audit must return the recorded outcome");
        match (tamper, &first) {
            (false, Reply::AuditResult { status: AuditStatus::Verified, .. }) => {}
            (true, Reply::AuditResult { status: AuditStatus::Rejected, reason, .. }) => {
                assert_eq!(reason.as_deref(), Some("Invalid proof"));
            }
            other => panic!("unexpected audit outcome {other:?}"),
        }
    }
    println!("ACCEPTANCE state-machine-exhaustion: PASS (18 pairs + idempotent replay)");
}

/// Persistence replay: after 20 mixed verified/rejected sessions, replaying
/// audit_db.jsonl and violations.jsonl reconstructs the exact final registry
/// state.
#[test]
fn acceptance_persistence_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let table = TypeTable::default_table();
    let mut rng = rng(8);
    let n = 2usize;
    let crs = setup(CircuitParams::new(n).unwrap(), &table, BackendKind::InsecureOracle, &mut rng)
        .unwrap();
    let prover = Prover::new(crs.clone(), &table).unwrap();

    let mut expected_states = std::collections::BTreeMap::new();
    {
        let store = AuditStore::open(tmp.path()).unwrap();
        let asp = Asp::new(&crs, store, true).unwrap();
        for i in 0..20 {
            let s_id = format!("persist-{i}");
            asp.handle(Event::SessionStart {
                s_id: s_id.clone(),
                initiator: "a".into(),
                peer: "b".into(),
            })
            .unwrap();
            let msgs = random_session(&mut rng, n, &table);
            let mut bundle = prover.prove_messages(&msgs, &s_id, &mut rng).unwrap();
            let tampered = i % 3 == 0;
            if tampered {
                let j = rng.gen_range(0..bundle.statement.counts.len());
                bundle.statement.counts[j] += 1;
            }
            asp.handle(Event::AuditRequest { bundle, submitter: "a".into(), filler_count: 0 })
                .unwrap();
            asp.handle(Event::SessionClose { s_id: s_id.clone() }).unwrap();
            expected_states.insert(s_id, if tampered { "rejected" } else { "verified" });
        }

        // The in-memory truth to reconstruct.
        let live = asp.decided_outcomes();
        let replayed = replay_outcomes(
            &asp.store().load_audits().unwrap(),
            &asp.store().load_violations().unwrap(),
        );
        assert_eq!(live, replayed, "log replay diverges from the live registry");
    }

    // A fresh service over the same directory recovers the same state.
    let store = AuditStore::open(tmp.path()).unwrap();
    let recovered = Asp::new(&crs, store, true).unwrap();
    let outcomes = recovered.decided_outcomes();
    assert_eq!(outcomes.len(), 20);
    for (s_id, verdict) in &expected_states {
        let outcome = &outcomes[&(s_id.clone(), "a".to_string())];
        assert_eq!(outcome.verified, *verdict == "verified", "outcome mismatch for {s_id}");
        assert_eq!(
            recovered.session_state(s_id),
            Some(SessionState::SessionClosed),
            "registry state mismatch for {s_id}"
        );
        if outcome.verified {
            let counts = outcome.counts.as_ref().expect("verified outcomes carry counts");
            assert_eq!(counts.iter().sum::<u64>(), n as u64);
        }
    }
    let verified = outcomes.values().filter(|o| o.verified).count();
    println!(
        "ACCEPTANCE persistence-replay: PASS ({verified} verified, {} rejected)",
        20 - verified
    );
}

/// Cross-check that the statement type used on the wire is exactly the public
/// statement shape (counts then hashes, nothing else).
#[test]
fn statement_carries_only_counts_and_hashes() {
    let statement = PublicStatement {
        counts: vec![1, 0, 0, 0, 0, 0, 0, 0],
        hashes: vec![Fr::from(7u64)],
    };
    let json: serde_json::Value = serde_json::to_value(&statement).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["counts", "hashes"]);
}
