//! Machine-readable measurement reports with pinned column orders.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report failed validation: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// CSV column order for circuit scalability rows.
pub const BENCH_CSV_HEADER: [&str; 14] = [
    "n",
    "setup_ms",
    "prove_ms",
    "verify_ms",
    "peak_mem_setup",
    "peak_mem_prove",
    "constraints",
    "wires",
    "proof_bytes",
    "vk_bytes",
    "pk_bytes",
    "private_input_count",
    "public_output_count",
    "constraints_per_sec",
];

/// One circuit-size measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub setup_ms: f64,
    pub prove_ms: f64,
    pub verify_ms: f64,
    /// Peak resident set during setup, bytes.
    pub peak_mem_setup: u64,
    /// Peak resident set during proving, bytes.
    pub peak_mem_prove: u64,
    pub constraints: usize,
    pub wires: usize,
    pub proof_bytes: usize,
    pub vk_bytes: usize,
    pub pk_bytes: usize,
    pub private_input_count: usize,
    pub public_output_count: usize,
    pub constraints_per_sec: f64,
}

/// A row skipped for budget reasons, with the reason recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedRow {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub backend_id: String,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<SkippedRow>,
}

impl BenchReport {
    /// Rows must be strictly increasing in `n` with positive metrics
    /// (key sizes may be zero only for the development oracle backend).
    pub fn validate(&self) -> Result<(), ReportError> {
        let sized_keys = self.backend_id != zkmcp_core::proof::ORACLE_BACKEND_ID;
        let mut prev_n = 0usize;
        for row in &self.rows {
            if row.n <= prev_n {
                return Err(ReportError::Invalid(format!(
                    "rows not strictly increasing at n = {}",
                    row.n
                )));
            }
            prev_n = row.n;
            let positives: [(&str, f64); 4] = [
                ("setup_ms", row.setup_ms),
                ("prove_ms", row.prove_ms),
                ("verify_ms", row.verify_ms),
                ("constraints_per_sec", row.constraints_per_sec),
            ];
            for (name, value) in positives {
                if value <= 0.0 || !value.is_finite() {
                    return Err(ReportError::Invalid(format!("{name} = {value} at n = {}", row.n)));
                }
            }
            if row.constraints == 0
                || row.wires == 0
                || row.peak_mem_setup == 0
                || row.peak_mem_prove == 0
                || row.private_input_count == 0
                || row.public_output_count == 0
            {
                return Err(ReportError::Invalid(format!("zero metric at n = {}", row.n)));
            }
            if sized_keys && (row.proof_bytes == 0 || row.vk_bytes == 0 || row.pk_bytes == 0) {
                return Err(ReportError::Invalid(format!("zero artifact size at n = {}", row.n)));
            }
        }
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String, ReportError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(BENCH_CSV_HEADER)?;
        for r in &self.rows {
            writer.write_record([
                r.n.to_string(),
                format_ms(r.setup_ms),
                format_ms(r.prove_ms),
                format_ms(r.verify_ms),
                r.peak_mem_setup.to_string(),
                r.peak_mem_prove.to_string(),
                r.constraints.to_string(),
                r.wires.to_string(),
                r.proof_bytes.to_string(),
                r.vk_bytes.to_string(),
                r.pk_bytes.to_string(),
                r.private_input_count.to_string(),
                r.public_output_count.to_string(),
                format!("{:.1}", r.constraints_per_sec),
            ])?;
        }
        Ok(String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("utf8"))
    }
}

/// CSV column order for communication-overhead rows. `overhead_pct` is the
/// communication-path delta; the two trailing columns report the other
/// decompositions of audit cost.
pub const OVERHEAD_CSV_HEADER: [&str; 9] = [
    "model_profile",
    "n",
    "comm_ms_baseline",
    "comm_ms_with_audit",
    "prove_ms",
    "verify_ms",
    "overhead_pct",
    "verify_pct_of_total",
    "audit_pct_of_comm",
];

/// One paired baseline/audited comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverheadRow {
    pub model_profile: String,
    pub n: usize,
    pub comm_ms_baseline: f64,
    pub comm_ms_with_audit: f64,
    pub prove_ms: f64,
    pub verify_ms: f64,
    /// (comm_with_audit − comm_baseline) / comm_baseline × 100, with the
    /// communication phase measured identically in both runs.
    pub overhead_pct: f64,
    /// verify / (comm + prove + verify) × 100.
    pub verify_pct_of_total: f64,
    /// (prove + verify) / comm × 100 — the cost a blocking design would add.
    pub audit_pct_of_comm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverheadReport {
    pub rows: Vec<OverheadRow>,
}

impl OverheadReport {
    pub fn validate(&self) -> Result<(), ReportError> {
        for row in &self.rows {
            if row.comm_ms_baseline <= 0.0 || row.comm_ms_with_audit <= 0.0 {
                return Err(ReportError::Invalid("non-positive communication time".into()));
            }
            let expected = (row.comm_ms_with_audit - row.comm_ms_baseline)
                / row.comm_ms_baseline
                * 100.0;
            if (expected - row.overhead_pct).abs() > 1e-6 {
                return Err(ReportError::Invalid("overhead_pct does not match its inputs".into()));
            }
        }
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String, ReportError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(OVERHEAD_CSV_HEADER)?;
        for r in &self.rows {
            writer.write_record([
                r.model_profile.clone(),
                r.n.to_string(),
                format_ms(r.comm_ms_baseline),
                format_ms(r.comm_ms_with_audit),
                format_ms(r.prove_ms),
                format_ms(r.verify_ms),
                format!("{:.3}", r.overhead_pct),
                format!("{:.3}", r.verify_pct_of_total),
                format!("{:.3}", r.audit_pct_of_comm),
            ])?;
        }
        Ok(String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("utf8"))
    }
}

fn format_ms(v: f64) -> String {
    format!("{v:.3}")
}

/// Writes a report in the requested format. Column order is fixed; output is
/// stable across runs for identical inputs.
pub fn emit_report<R: Emit>(report: &R, format: ReportFormat, path: &Path) -> Result<(), ReportError> {
    let text = match format {
        ReportFormat::Csv => report.csv_string()?,
        ReportFormat::Json => report.json_string()?,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Reports that know how to render themselves.
pub trait Emit: Serialize {
    fn csv_string(&self) -> Result<String, ReportError>;

    fn json_string(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Emit for BenchReport {
    fn csv_string(&self) -> Result<String, ReportError> {
        BenchReport::csv_string(self)
    }
}

impl Emit for OverheadReport {
    fn csv_string(&self) -> Result<String, ReportError> {
        OverheadReport::csv_string(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row(n: usize) -> BenchRow {
        BenchRow {
            n,
            setup_ms: 10.0,
            prove_ms: 20.0,
            verify_ms: 2.0,
            peak_mem_setup: 1 << 20,
            peak_mem_prove: 1 << 21,
            constraints: 1000 * n,
            wires: 900 * n,
            proof_bytes: 128,
            vk_bytes: 500,
            pk_bytes: 10_000,
            private_input_count: 65 * n,
            public_output_count: 8 + n,
            constraints_per_sec: 50_000.0,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = BenchReport {
            backend_id: "groth16-bn254".into(),
            rows: vec![],
            skipped: vec![],
        };
        let csv = report.csv_string().unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(csv.lines().next().unwrap(), BENCH_CSV_HEADER.join(","));
    }

    #[test]
    fn csv_is_deterministic() {
        let report = BenchReport {
            backend_id: "groth16-bn254".into(),
            rows: vec![sample_row(1), sample_row(2)],
            skipped: vec![],
        };
        assert_eq!(report.csv_string().unwrap(), report.csv_string().unwrap());
        assert_eq!(report.csv_string().unwrap().lines().count(), 3);
    }

    #[test]
    fn json_round_trips() {
        let report = BenchReport {
            backend_id: "groth16-bn254".into(),
            rows: vec![sample_row(4)],
            skipped: vec![SkippedRow { n: 512, reason: "OutOfBudget".into() }],
        };
        let text = report.json_string().unwrap();
        let back: BenchReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.rows.len(), 1);
        assert_eq!(back.skipped[0].n, 512);
    }

    #[test]
    fn validation_requires_increasing_n_and_positive_metrics() {
        let mut report = BenchReport {
            backend_id: "groth16-bn254".into(),
            rows: vec![sample_row(2), sample_row(2)],
            skipped: vec![],
        };
        assert!(report.validate().is_err());
        report.rows[1].n = 4;
        assert!(report.validate().is_ok());
        report.rows[1].prove_ms = 0.0;
        assert!(report.validate().is_err());
    }

    #[test]
    fn overhead_validation_checks_the_formula() {
        let mut report = OverheadReport {
            rows: vec![OverheadRow {
                model_profile: "fixed-200ms".into(),
                n: 8,
                comm_ms_baseline: 1600.0,
                comm_ms_with_audit: 1616.0,
                prove_ms: 120.0,
                verify_ms: 3.0,
                overhead_pct: 1.0,
                verify_pct_of_total: 0.17,
                audit_pct_of_comm: 7.7,
            }],
        };
        assert!(report.validate().is_ok());
        report.rows[0].overhead_pct = 5.0;
        assert!(report.validate().is_err());
    }

    #[test]
    fn emit_writes_files() {
        let tmp = tempfile::tempdir().unwrap();
        let report = BenchReport {
            backend_id: "insecure-oracle".into(),
            rows: vec![],
            skipped: vec![],
        };
        let csv_path = tmp.path().join("report.csv");
        let json_path = tmp.path().join("report.json");
        emit_report(&report, ReportFormat::Csv, &csv_path).unwrap();
        emit_report(&report, ReportFormat::Json, &json_path).unwrap();
        assert!(csv_path.is_file());
        assert!(json_path.is_file());
    }
}
