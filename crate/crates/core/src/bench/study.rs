//! Macro-replication studies: many seeded runs of several algorithm
//! variants on one problem and budget.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::engine::{run, Algorithm, RunConfig, RunTrace};
use crate::error::{PgloError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub algorithm: Algorithm,
    pub q: usize,
}

impl Variant {
    /// Parses `algorithm:q`, e.g. `pglo:4` or `multpps-lhs:1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, q) = s.split_once(':').unwrap_or((s, "1"));
        let q: usize = q.trim().parse().map_err(|_| PgloError::config(format!("bad worker count in variant '{s}'")))?;
        if q == 0 {
            return Err(PgloError::config(format!("variant '{s}' needs q ≥ 1")));
        }
        Ok(Self { algorithm: Algorithm::parse(name.trim())?, q })
    }

    pub fn label(&self) -> String {
        format!("{}:{}", self.algorithm.label(), self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub template: RunConfig,
    pub seeds: Vec<u64>,
    pub variants: Vec<Variant>,
    /// Runs executed concurrently.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: String,
    pub seed: u64,
    /// The incumbent met the tolerance at some trace row.
    pub success: bool,
    pub final_relative_error: f64,
    /// Evaluations until the incumbent first met the tolerance.
    pub evals_to_success: Option<usize>,
    /// `evals_to_success`, censored at the budget.
    pub censored_evals: usize,
    pub elapsed_to_success_ms: Option<u64>,
    pub censored_elapsed_ms: u64,
    pub evaluations: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_evals_to_success: f64,
    pub median_evals_to_success: f64,
    pub mean_elapsed_to_success_ms: f64,
    pub median_elapsed_to_success_ms: f64,
    /// Mean censored evaluations of the same algorithm at `q = 1` over this variant's.
    pub speedup_evals: Option<f64>,
    /// Same ratio on elapsed time.
    pub speedup_wall: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub budget: usize,
    pub records: Vec<RunRecord>,
    pub traces: Vec<RunTrace>,
    pub summaries: Vec<VariantSummary>,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

/// Runs every variant on every seed. Output order is variant-major and does
/// not depend on `jobs`.
pub fn macro_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.variants.is_empty() || config.seeds.is_empty() {
        return Err(PgloError::config("a study needs at least one variant and one seed"));
    }
    let budget = config.template.resolve()?.t;
    let tasks: Vec<(Variant, u64)> =
        config.variants.iter().flat_map(|v| config.seeds.iter().map(move |s| (*v, *s))).collect();
    let slots: Mutex<Vec<Option<Result<(RunRecord, RunTrace)>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(&(variant, seed)) = tasks.get(i) else { break };
        let mut cfg = config.template.clone();
        cfg.algorithm = variant.algorithm;
        cfg.q = variant.q;
        cfg.seed = seed;
        let outcome = run(&cfg).map(|out| {
            let tol = out.summary.config.success_tol;
            let record = RunRecord {
                variant: variant.label(),
                seed,
                success: out.trace.evals_to_success(tol).is_some(),
                final_relative_error: out.summary.relative_error,
                evals_to_success: out.trace.evals_to_success(tol),
                censored_evals: out.trace.evals_to_success(tol).unwrap_or(budget),
                elapsed_to_success_ms: out.trace.elapsed_to_success(tol),
                censored_elapsed_ms: out.trace.elapsed_to_success(tol).unwrap_or(out.summary.elapsed_ms),
                evaluations: out.summary.evaluations,
                elapsed_ms: out.summary.elapsed_ms,
            };
            (record, out.trace)
        });
        slots.lock().expect("study results lock")[i] = Some(outcome);
    };
    let jobs = config.jobs.clamp(1, tasks.len());
    if jobs == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
    }
    let mut records = Vec::with_capacity(tasks.len());
    let mut traces = Vec::with_capacity(tasks.len());
    for slot in slots.into_inner().expect("study results lock") {
        let (r, t) = slot.expect("every study task ran")?;
        records.push(r);
        traces.push(t);
    }
    let summaries = summarize(&config.variants, &records);
    Ok(StudyResult { budget, records, traces, summaries })
}

fn summarize(variants: &[Variant], records: &[RunRecord]) -> Vec<VariantSummary> {
    let stats = |label: &str| -> (Vec<f64>, Vec<f64>, usize) {
        let rs: Vec<&RunRecord> = records.iter().filter(|r| r.variant == label).collect();
        (
            rs.iter().map(|r| r.censored_evals as f64).collect(),
            rs.iter().map(|r| r.censored_elapsed_ms as f64).collect(),
            rs.iter().filter(|r| r.success).count(),
        )
    };
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for v in variants {
        let label = v.label();
        if seen.contains(&label) {
            continue;
        }
        seen.push(label.clone());
        let (evals, wall, successes) = stats(&label);
        let base = Variant { algorithm: v.algorithm, q: 1 }.label();
        let base_listed = variants.iter().any(|u| u.label() == base);
        let (speedup_evals, speedup_wall) = if base_listed {
            let (be, bw, _) = stats(&base);
            (Some(mean(&be) / mean(&evals)), Some(mean(&bw) / mean(&wall)))
        } else {
            (None, None)
        };
        out.push(VariantSummary {
            variant: label,
            runs: evals.len(),
            successes,
            success_rate: successes as f64 / evals.len() as f64,
            mean_evals_to_success: mean(&evals),
            median_evals_to_success: median(&evals),
            mean_elapsed_to_success_ms: mean(&wall),
            median_elapsed_to_success_ms: median(&wall),
            speedup_evals,
            speedup_wall,
        });
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl StudyResult {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "variant,runs,successes,success_rate,mean_evals_to_success,median_evals_to_success,\
             mean_elapsed_to_success_ms,median_elapsed_to_success_ms,speedup_evals,speedup_wall\n",
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.variant,
                s.runs,
                s.successes,
                s.success_rate,
                s.mean_evals_to_success,
                s.median_evals_to_success,
                s.mean_elapsed_to_success_ms,
                s.median_elapsed_to_success_ms,
                opt(s.speedup_evals),
                opt(s.speedup_wall)
            );
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from(
            "variant,seed,success,final_relative_error,evals_to_success,censored_evals,evaluations,elapsed_ms\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.variant,
                r.seed,
                r.success,
                r.final_relative_error,
                r.evals_to_success.map_or(String::new(), |e| e.to_string()),
                r.censored_evals,
                r.evaluations,
                r.elapsed_ms
            );
        }
        out
    }

    /// Quantiles of the incumbent's relative error across seeds on a grid
    /// of 50 evaluation counts.
    pub fn quantiles_csv(&self) -> String {
        let mut out = String::from("variant,evals,runs,q10,q25,q50,q75,q90\n");
        let step = (self.budget / 50).max(1);
        let mut labels: Vec<&str> = Vec::new();
        for r in &self.records {
            if !labels.contains(&r.variant.as_str()) {
                labels.push(&r.variant);
            }
        }
        for label in labels {
            let traces: Vec<&RunTrace> =
                self.records.iter().zip(&self.traces).filter(|(r, _)| r.variant == label).map(|(_, t)| t).collect();
            for g in (step..=self.budget).step_by(step) {
                let mut errs: Vec<f64> = traces.iter().filter_map(|t| t.error_at(g)).collect();
                if errs.is_empty() {
                    continue;
                }
                errs.sort_by(f64::total_cmp);
                let q = |p| quantile(&errs, p);
                let _ = writeln!(
                    out,
                    "{label},{g},{},{},{},{},{},{}",
                    errs.len(),
                    q(0.1),
                    q(0.25),
                    q(0.5),
                    q(0.75),
                    q(0.9)
                );
            }
        }
        out
    }

    /// Writes `study_summary.csv`, `study_runs.csv`,
    /// `convergence_quantiles.csv` and one trace per run under `dir/traces`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir.join("traces"))?;
        std::fs::write(dir.join("study_summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("study_runs.csv"), self.runs_csv())?;
        std::fs::write(dir.join("convergence_quantiles.csv"), self.quantiles_csv())?;
        for (r, t) in self.records.iter().zip(&self.traces) {
            let name = format!("{}_seed{}.csv", r.variant.replace(':', "_q"), r.seed);
            std::fs::write(dir.join("traces").join(name), t.to_csv())?;
        }
        Ok(())
    }
}
