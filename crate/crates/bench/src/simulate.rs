//! Scripted agent pairs with injected per-message latency, measuring the
//! communication phase with auditing on and off.
//!
//! Real model latencies are irreproducible, so the simulator stands in for
//! them with configurable delay profiles (named after typical hosted-model
//! latency classes). Sessions run concurrently; with auditing on, proof
//! generation happens on a background thread strictly after session
//! shutdown, which is exactly the property the paired comparison measures.

use crate::report::{OverheadReport, OverheadRow};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};
use thiserror::Error;
use zkmcp_core::params::TypeTable;
use zkmcp_core::proof::{CrsBundle, ProofError, Prover, Verifier};
use zkmcp_protocol::storage::AuditStore;
use zkmcp_protocol::{
    Agent, AgentConfig, AgentError, AspError, AuditStatus, Direction, ServeError, ServerConfig,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Asp(#[from] AspError),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("audit service unreachable: {0}")]
    AspUnreachable(String),
    #[error("session {0} never received an audit result")]
    MissingResult(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("simulation thread panicked")]
    Panicked,
}

/// Per-message delay distribution: `base ± jitter`, uniform.
#[derive(Debug, Clone)]
pub struct LatencyProfile {
    pub name: String,
    pub base: Duration,
    pub jitter: Duration,
}

impl LatencyProfile {
    pub fn fixed_ms(ms: u64) -> Self {
        Self { name: format!("fixed-{ms}ms"), base: Duration::from_millis(ms), jitter: Duration::ZERO }
    }

    pub fn deepseek_v3_like() -> Self {
        Self {
            name: "deepseek-v3-like".into(),
            base: Duration::from_millis(1200),
            jitter: Duration::from_millis(400),
        }
    }

    pub fn gpt41_mini_like() -> Self {
        Self {
            name: "gpt-4.1-mini-like".into(),
            base: Duration::from_millis(800),
            jitter: Duration::from_millis(250),
        }
    }

    pub fn gpt35_turbo_like() -> Self {
        Self {
            name: "gpt-3.5-turbo-like".into(),
            base: Duration::from_millis(500),
            jitter: Duration::from_millis(150),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "deepseek-v3-like" => Some(Self::deepseek_v3_like()),
            "gpt-4.1-mini-like" => Some(Self::gpt41_mini_like()),
            "gpt-3.5-turbo-like" => Some(Self::gpt35_turbo_like()),
            _ => None,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Duration {
        if self.jitter.is_zero() {
            return self.base;
        }
        let jitter_ns = self.jitter.as_nanos() as i128;
        let offset = rng.gen_range(-jitter_ns..=jitter_ns);
        let ns = (self.base.as_nanos() as i128 + offset).max(0) as u64;
        Duration::from_nanos(ns)
    }
}

/// Where the audit service lives for a run.
#[derive(Debug, Clone)]
pub enum AspTarget {
    /// Spawn a service in-process on a loopback port.
    InProcess,
    /// Use an already-running service.
    External(String),
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub sessions: usize,
    /// Scripted messages per session; fewer than the circuit size is topped
    /// up with filler at audit time.
    pub messages: usize,
    pub latency: LatencyProfile,
    pub audit: bool,
    pub asp: AspTarget,
    /// Storage dir for an in-process service; a temp dir when absent.
    pub data_dir: Option<PathBuf>,
    pub seed: u64,
    /// How long to wait for audit results after the sessions finish.
    pub result_timeout: Duration,
}

impl SimulateConfig {
    pub fn new(sessions: usize, messages: usize, latency: LatencyProfile, audit: bool) -> Self {
        Self {
            sessions,
            messages,
            latency,
            audit,
            asp: AspTarget::InProcess,
            data_dir: None,
            seed: 0x51f7ed,
            result_timeout: Duration::from_secs(60),
        }
    }
}

/// Timings for one simulated session.
#[derive(Debug, Clone)]
pub struct SessionSim {
    pub s_id: String,
    /// Duration of the communication phase.
    pub comm_ms: f64,
    /// Per-message wall time inside the communication loop.
    pub per_message_ms: Vec<f64>,
    pub prove_ms: f64,
    pub verify_ms: f64,
    /// Whether proving started only after session shutdown.
    pub prove_after_shutdown: bool,
    pub verified: Option<bool>,
    pub counts: Vec<u64>,
    pub filler_count: u64,
}

/// One full run (all sessions, one audit setting).
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub profile: String,
    pub n: usize,
    pub audit: bool,
    pub sessions: Vec<SessionSim>,
}

impl SimulationRun {
    pub fn mean_comm_ms(&self) -> f64 {
        mean(self.sessions.iter().map(|s| s.comm_ms))
    }

    pub fn mean_per_message_ms(&self) -> f64 {
        mean(self.sessions.iter().flat_map(|s| s.per_message_ms.iter().copied()))
    }

    pub fn mean_prove_ms(&self) -> f64 {
        mean(self.sessions.iter().map(|s| s.prove_ms))
    }

    pub fn mean_verify_ms(&self) -> f64 {
        mean(self.sessions.iter().map(|s| s.verify_ms))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Runs scripted sessions against an audit service and reports per-phase
/// timings.
pub fn simulate_sessions(
    cfg: &SimulateConfig,
    crs: &CrsBundle,
    table: &TypeTable,
) -> Result<SimulationRun, SimError> {
    let n = crs.circuit_meta.n;
    let (_held_tmp, _held_server, asp_addr) = match &cfg.asp {
        AspTarget::External(addr) => (None, None, addr.clone()),
        AspTarget::InProcess => {
            let (tmp, dir) = match &cfg.data_dir {
                Some(dir) => (None, dir.clone()),
                None => {
                    let tmp = tempfile::tempdir()?;
                    let dir = tmp.path().to_path_buf();
                    (Some(tmp), dir)
                }
            };
            let store = AuditStore::open(&dir)?;
            let asp = Arc::new(zkmcp_protocol::Asp::new(crs, store, true)?);
            let server = zkmcp_protocol::spawn(asp, ServerConfig::default())?;
            let addr = server.addr().to_string();
            (tmp, Some(server), addr)
        }
    };

    let prover = Arc::new(Prover::new(crs.clone(), table)?);
    let verifier = Arc::new(Verifier::new(crs)?);
    let agent = Arc::new(Agent::new(
        AgentConfig::new("sim-initiator", &asp_addr, table.clone()),
        Arc::clone(&prover),
    )?);

    let mut handles = Vec::new();
    for session_index in 0..cfg.sessions {
        let agent = Arc::clone(&agent);
        let verifier = Arc::clone(&verifier);
        let latency = cfg.latency.clone();
        let table = table.clone();
        let audit = cfg.audit;
        let messages = cfg.messages;
        let seed = cfg.seed;
        let result_timeout = cfg.result_timeout;
        handles.push(std::thread::spawn(move || -> Result<SessionSim, SimError> {
            // The message script depends only on (seed, session_index), so a
            // fixed seed reproduces identical counts across runs.
            let mut script_rng = ChaCha20Rng::seed_from_u64(seed ^ (session_index as u64) << 17);
            let mut latency_rng =
                ChaCha20Rng::seed_from_u64(seed.wrapping_add(0x9e3779b9).wrapping_add(session_index as u64));

            let s_id = agent.start_session("sim-responder");
            let comm_start = Instant::now();
            let mut per_message_ms = Vec::with_capacity(messages);
            for k in 0..messages {
                let message_start = Instant::now();
                // Injected provider latency stands in for the remote model.
                std::thread::sleep(latency.sample(&mut latency_rng));
                let type_name = table.entry(script_rng.gen_range(0..table.len())).to_string();
                let direction =
                    if k % 2 == 0 { Direction::Sent } else { Direction::Received };
                agent.record_type(&s_id, &type_name, direction)?;
                per_message_ms.push(message_start.elapsed().as_secs_f64() * 1e3);
            }
            let comm_ms = comm_start.elapsed().as_secs_f64() * 1e3;
            let shutdown_ms = zkmcp_core::proof::now_ms();

            if !audit {
                agent.end_session(&s_id)?;
                return Ok(SessionSim {
                    s_id,
                    comm_ms,
                    per_message_ms,
                    prove_ms: 0.0,
                    verify_ms: 0.0,
                    prove_after_shutdown: true,
                    verified: None,
                    counts: Vec::new(),
                    filler_count: 0,
                });
            }

            // Proof generation strictly after session shutdown, on its own
            // thread.
            let audit_handle = agent.spawn_audit_with_filler(s_id.clone());
            let receipt = audit_handle.join().map_err(|_| SimError::Panicked)??;
            let prove_ms = (receipt.prove_finished_ms - receipt.prove_started_ms) as f64;
            let prove_after_shutdown = receipt.prove_started_ms >= shutdown_ms;

            // Verifier-side cost, measured on the same bundle the service
            // checks.
            let verify_start = Instant::now();
            let verified_locally = verifier.verify(&receipt.bundle)?;
            let verify_ms = verify_start.elapsed().as_secs_f64() * 1e3;
            debug_assert!(verified_locally);

            let (status, _reason) = agent
                .wait_for_audit(&s_id, result_timeout)
                .ok_or_else(|| SimError::MissingResult(s_id.clone()))?;
            Ok(SessionSim {
                s_id,
                comm_ms,
                per_message_ms,
                prove_ms,
                verify_ms,
                prove_after_shutdown,
                verified: Some(status == AuditStatus::Verified),
                counts: receipt.bundle.statement.counts.clone(),
                filler_count: receipt.filler_count,
            })
        }));
    }

    let mut sessions = Vec::with_capacity(handles.len());
    for handle in handles {
        sessions.push(handle.join().map_err(|_| SimError::Panicked)??);
    }
    agent.wait_idle(cfg.result_timeout);

    Ok(SimulationRun { profile: cfg.latency.name.clone(), n, audit: cfg.audit, sessions })
}

/// Runs the paired comparison — identical communication loops with auditing
/// off and on — and reduces it to one overhead row.
pub fn paired_overhead(
    cfg: &SimulateConfig,
    crs: &CrsBundle,
    table: &TypeTable,
) -> Result<(OverheadReport, SimulationRun, SimulationRun), SimError> {
    let baseline_cfg = SimulateConfig { audit: false, ..cfg.clone() };
    let audited_cfg = SimulateConfig { audit: true, ..cfg.clone() };
    let baseline = simulate_sessions(&baseline_cfg, crs, table)?;
    let audited = simulate_sessions(&audited_cfg, crs, table)?;

    let comm_ms_baseline = baseline.mean_comm_ms();
    let comm_ms_with_audit = audited.mean_comm_ms();
    let prove_ms = audited.mean_prove_ms();
    let verify_ms = audited.mean_verify_ms();
    let overhead_pct = (comm_ms_with_audit - comm_ms_baseline) / comm_ms_baseline * 100.0;
    let verify_pct_of_total =
        verify_ms / (comm_ms_with_audit + prove_ms + verify_ms) * 100.0;
    let audit_pct_of_comm = (prove_ms + verify_ms) / comm_ms_with_audit * 100.0;

    let report = OverheadReport {
        rows: vec![OverheadRow {
            model_profile: cfg.latency.name.clone(),
            n: crs.circuit_meta.n,
            comm_ms_baseline,
            comm_ms_with_audit,
            prove_ms,
            verify_ms,
            overhead_pct,
            verify_pct_of_total,
            audit_pct_of_comm,
        }],
    };
    report.validate().expect("constructed from its own inputs");
    Ok((report, baseline, audited))
}
