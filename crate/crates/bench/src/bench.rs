//! Circuit scalability measurement: for each session size `n`, a fresh
//! setup, one honest prove, and one verify, with timings, memory peaks, and
//! artifact sizes sampled per phase.

use crate::mem::PeakRssSampler;
use crate::report::{BenchReport, BenchRow, ReportError, SkippedRow};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use std::time::Instant;
use thiserror::Error;
use zkmcp_core::circuit::{build_circuit, synthesize_witness, CircuitError};
use zkmcp_core::message::AuditMessage;
use zkmcp_core::params::{CircuitParams, ParamsError, TypeTable};
use zkmcp_core::proof::{setup, BackendKind, ProofError, Prover, Verifier};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("honest proof failed to verify at n = {0}; measurement aborted")]
    Inconsistent(usize),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub backend: BackendKind,
    pub table: TypeTable,
    /// Rows whose circuits exceed this constraint count are skipped with an
    /// OutOfBudget reason instead of exhausting memory.
    pub max_constraints: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(n_list: Vec<usize>, backend: BackendKind) -> Self {
        Self {
            n_list,
            backend,
            table: TypeTable::default_table(),
            max_constraints: 2_000_000,
            seed: 0x5eed,
        }
    }
}

/// Runs the sweep. Rows are measured serially, smallest `n` first.
pub fn bench_circuit(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    let mut n_list = cfg.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for n in n_list {
        let params = CircuitParams::new(n)?;
        let cs = build_circuit(params, &cfg.table)?;
        if cs.constraint_count() > cfg.max_constraints {
            skipped.push(SkippedRow {
                n,
                reason: format!(
                    "OutOfBudget: {} constraints exceed the {}-constraint budget",
                    cs.constraint_count(),
                    cfg.max_constraints
                ),
            });
            continue;
        }

        let setup_sampler = PeakRssSampler::start();
        let t = Instant::now();
        let crs = setup(params, &cfg.table, cfg.backend, &mut rng)?;
        let setup_ms = elapsed_ms(t);
        let peak_mem_setup = setup_sampler.stop().max(1);

        let prover = Prover::new(crs.clone(), &cfg.table)?;
        let verifier = Verifier::new(&crs)?;

        let messages: Vec<AuditMessage> = (0..n)
            .map(|i| {
                let t = cfg.table.entry(rng.gen_range(0..cfg.table.len()));
                AuditMessage::from_type(t.as_bytes(), params.max_type, i as u64)
                    .expect("table entries canonicalize")
            })
            .collect();
        let (witness, statement) = synthesize_witness(&cs, &messages)?;

        let prove_sampler = PeakRssSampler::start();
        let t = Instant::now();
        let bundle = prover.prove(&statement, &witness, &format!("bench-n{n}"), &mut rng)?;
        let prove_ms = elapsed_ms(t);
        let peak_mem_prove = prove_sampler.stop().max(1);

        let t = Instant::now();
        let ok = verifier.verify(&bundle)?;
        let verify_ms = elapsed_ms(t);
        if !ok {
            return Err(BenchError::Inconsistent(n));
        }

        rows.push(BenchRow {
            n,
            setup_ms,
            prove_ms,
            verify_ms,
            peak_mem_setup,
            peak_mem_prove,
            constraints: cs.constraint_count(),
            wires: cs.wire_count(),
            proof_bytes: bundle.proof.payload.len(),
            vk_bytes: crs.verification_key.len(),
            pk_bytes: crs.proving_key.len(),
            private_input_count: cs.declared_private_inputs(),
            public_output_count: cs.num_public(),
            constraints_per_sec: cs.constraint_count() as f64 / (prove_ms / 1000.0).max(1e-9),
        });
        log::info!(
            "bench n={n}: {} constraints, setup {setup_ms:.1} ms, prove {prove_ms:.1} ms, verify {verify_ms:.2} ms",
            cs.constraint_count()
        );
    }

    let report = BenchReport { backend_id: cfg.backend.id().to_string(), rows, skipped };
    report.validate()?;
    Ok(report)
}

fn elapsed_ms(t: Instant) -> f64 {
    (t.elapsed().as_nanos() as f64 / 1e6).max(1e-6)
}
