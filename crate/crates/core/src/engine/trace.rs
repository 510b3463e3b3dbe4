//! Per-iteration convergence log and run summary.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    /// Distinct design points evaluated so far.
    pub n_points: usize,
    /// Cumulative evaluations (replications).
    pub evals: usize,
    /// Incumbent location in problem units.
    pub incumbent: Vec<f64>,
    /// Incumbent sample mean, user-facing sign.
    pub incumbent_mean: f64,
    /// True objective at the incumbent, user-facing sign.
    pub true_f: f64,
    pub relative_error: f64,
    pub stage: String,
    pub q_k: Vec<usize>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub dim: usize,
    pub rows: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn header(dim: usize) -> String {
        let xs: Vec<String> = (1..=dim).map(|j| format!("incumbent_x{j}")).collect();
        format!("iter,N_t,evals,{},incumbent_mean,true_f,stage,q_k_vector,elapsed_ms", xs.join(","))
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::header(self.dim);
        out.push('\n');
        for r in &self.rows {
            let xs: Vec<String> = r.incumbent.iter().map(|v| v.to_string()).collect();
            let qk: Vec<String> = r.q_k.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.iter,
                r.n_points,
                r.evals,
                xs.join(","),
                r.incumbent_mean,
                r.true_f,
                r.stage,
                qk.join(";"),
                r.elapsed_ms
            );
        }
        out
    }

    /// Evaluations at the first row whose incumbent meets `tolerance`.
    pub fn evals_to_success(&self, tolerance: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.relative_error < tolerance).map(|r| r.evals)
    }

    /// Elapsed time at the first successful row.
    pub fn elapsed_to_success(&self, tolerance: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.relative_error < tolerance).map(|r| r.elapsed_ms)
    }

    /// Incumbent relative error after `evals` evaluations (last row at or
    /// before that count).
    pub fn error_at(&self, evals: usize) -> Option<f64> {
        self.rows.iter().take_while(|r| r.evals <= evals).last().map(|r| r.relative_error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub incumbent: Vec<f64>,
    pub incumbent_mean: f64,
    pub incumbent_replications: usize,
    pub true_f: f64,
    pub f_star: f64,
    pub relative_error: f64,
    pub success: bool,
    pub evals_to_success: Option<usize>,
    pub evaluations: usize,
    pub design_points: usize,
    pub iterations: usize,
    pub elapsed_ms: u64,
    pub warnings: Vec<String>,
}
