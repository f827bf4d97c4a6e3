//! Report records and their JSON/CSV serialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use qcorr::emml::ConvergenceRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    pub seed: u64,
    pub max_qubits: usize,
    pub inputs: Vec<String>,
    /// Inputs that were constant and mapped to the uniform array.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub degenerate_inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Unix seconds; only with `--timing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub array_id: Option<usize>,
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel: Option<[usize; 2]>,
    pub quantum_estimate: f64,
    pub classical_value: f64,
    pub abs_error: f64,
    /// Bound evaluated at the estimate.
    pub error_bound: f64,
    /// Bound evaluated at the classical value.
    pub error_bound_classical: f64,
    pub within_bound: bool,
    pub m_hat: usize,
    pub oracle_calls: u64,
    pub peak_theory: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_quantum_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_classical_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_coverage: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    pub fraction_within_bound: f64,
    pub total_oracle_calls: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl Summary {
    pub fn of(rows: &[Row], total_oracle_calls: u64) -> Self {
        let count = rows.len();
        let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        let (mean_abs_error, fraction_within_bound) = if count == 0 {
            (0.0, 1.0)
        } else {
            (
                rows.iter().map(|r| r.abs_error).sum::<f64>() / count as f64,
                rows.iter().filter(|r| r.within_bound).count() as f64 / count as f64,
            )
        };
        Self {
            rows: count,
            max_abs_error,
            mean_abs_error,
            fraction_within_bound,
            total_oracle_calls,
            wall_time_ms: None,
        }
    }

    pub fn all_within(&self) -> bool {
        self.fraction_within_bound >= 1.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub t: usize,
    pub rows: Vec<Row>,
    pub convergence: Vec<ConvergenceRow>,
    pub summary: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmmlReport {
    pub metadata: Metadata,
    pub iterations: Vec<IterationReport>,
    pub converged: bool,
    /// Final arrays, row-major, one per input.
    pub final_arrays: Vec<Vec<f64>>,
    pub summary: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub instances: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Median over instances of each instance's maximum error.
    pub median_max_abs_error: f64,
    pub max_error_bound: f64,
    pub fraction_within_bound: f64,
    /// Controlled-operator applications of one circuit run (`M − 1`).
    pub oracle_calls_per_run: u64,
    pub total_oracle_calls: u64,
    /// Classical operation count for the same quantity: `N·log2 N` for all
    /// lags of a 1D correlation, `N²·log2 N` per EMML pixel.
    pub classical_cost: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepMetadata {
    pub algorithm: String,
    pub n_list: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_list: Option<Vec<f64>>,
    pub seeds: u64,
    pub seed: u64,
    pub mode: String,
    pub max_qubits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Shortest round-trip representation; exponent form for tiny magnitudes.
pub fn num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "iteration",
        "array_id",
        "index",
        "j",
        "k",
        "quantum_estimate",
        "classical_value",
        "abs_error",
        "error_bound",
        "error_bound_classical",
        "within_bound",
        "m_hat",
        "oracle_calls",
        "peak_low",
        "peak_high",
        "raw_quantum_estimate",
        "raw_classical_value",
        "samples",
        "low_coverage",
    ])?;
    for r in rows {
        w.write_record([
            opt(r.iteration),
            opt(r.array_id),
            r.index.to_string(),
            opt(r.pixel.map(|p| p[0])),
            opt(r.pixel.map(|p| p[1])),
            num(r.quantum_estimate),
            num(r.classical_value),
            num(r.abs_error),
            num(r.error_bound),
            num(r.error_bound_classical),
            r.within_bound.to_string(),
            r.m_hat.to_string(),
            r.oracle_calls.to_string(),
            num(r.peak_theory[0]),
            num(r.peak_theory[1]),
            opt(r.raw_quantum_estimate),
            opt(r.raw_classical_value),
            opt(r.samples),
            opt(r.low_coverage),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `out`, or stdout when absent.
pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
