//! Measurement harnesses: circuit scalability sweeps over the session size,
//! and paired communication-overhead runs with simulated agents.

pub mod bench;
pub mod mem;
pub mod report;
pub mod simulate;

pub use bench::{bench_circuit, BenchConfig, BenchError};
pub use report::{
    emit_report, BenchReport, BenchRow, OverheadReport, OverheadRow, ReportError, ReportFormat,
    SkippedRow,
};
pub use simulate::{
    paired_overhead, simulate_sessions, AspTarget, LatencyProfile, SimError, SimulateConfig,
    SimulationRun,
};
