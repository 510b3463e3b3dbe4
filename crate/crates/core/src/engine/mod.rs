//! The optimization loop and the multistart pattern-search baselines.
//!
//! A run alternates three stages until the evaluation budget `T` is spent:
//! a global stage that assigns `q` workers to regions by batch gEI, a local
//! stage of parallel pattern searches started from q-mEI points, and an
//! allocation stage that tops up replications (floor, then OCBA).
//!
//! All randomness comes from named streams of the root seed, and every
//! evaluation wave assigns tasks to workers round-robin, so a run is fully
//! reproducible for any `q`.

mod baselines;
pub mod config;
pub mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{propose_global_batch, propose_local_starts, BatchOptions, GlobalCandidateBatch, PenaltyState};
use crate::allocation::{min_replications, plan_stage, StagePlan};
use crate::archive::DesignArchive;
use crate::bench::Problem;
use crate::design::{latin_hypercube, Bounds};
use crate::direct_search::{is_terminated, poll_candidates, update_mesh, MeshState};
use crate::error::{PgloError, Result};
use crate::rng::{stream, stream_seed};
use crate::surrogate::{
    partition_space, AglgpModel, FitOptions, LoocvDiagnostics, ModelSnapshot, RegionPartition, DEFAULT_NOISE_FLOOR,
};

pub use config::{Algorithm, RunConfig};
pub use trace::{RunSummary, RunTrace, TraceRow};

/// Everything needed to continue a PGLO run from an iteration boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config: RunConfig,
    pub archive: DesignArchive,
    pub centroids: Vec<Vec<f64>>,
    pub iteration: usize,
    pub waves: u64,
    pub elapsed_ms: u64,
    pub trace: RunTrace,
    /// Most recently fitted model.
    pub model: Option<ModelSnapshot>,
    /// Replication floor of the last allocation stage; only points meeting it
    /// are eligible as the reported incumbent.
    pub settled_reps: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace: RunTrace,
    pub state: RunState,
}

/// Notifications emitted while a run progresses.
#[derive(Debug)]
pub enum RunEvent<'a> {
    Initialized { archive: &'a DesignArchive, loocv: Option<&'a LoocvDiagnostics> },
    GlobalBatch { iteration: usize, batch: &'a GlobalCandidateBatch },
    Allocated { iteration: usize, archive: &'a DesignArchive, plan: &'a StagePlan },
    IterationEnd { state: &'a RunState },
}

/// Optional hooks for a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    pub observer: Option<&'a mut dyn FnMut(&RunEvent<'_>)>,
    /// Stop (without finishing) after this many iterations.
    pub stop_after: Option<usize>,
}

/// Runs the configured algorithm to completion.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &RunConfig, options: RunOptions<'_>) -> Result<RunOutcome> {
    let config = config.resolve()?;
    match config.algorithm {
        Algorithm::Pglo => {
            let mut runner = Runner::new(config, options)?;
            runner.initialize()?;
            runner.iterate()?;
            Ok(runner.finish())
        }
        Algorithm::MultppsLhs => baselines::run_multistart(config, options, false),
        Algorithm::MultppsQei => baselines::run_multistart(config, options, true),
    }
}

/// Continues a PGLO run from a saved state.
pub fn resume(state: RunState, options: RunOptions<'_>) -> Result<RunOutcome> {
    let config = state.config.resolve()?;
    if config.algorithm != Algorithm::Pglo {
        return Err(PgloError::config("only pglo runs can be resumed"));
    }
    let mut runner = Runner::new(config, options)?;
    runner.state = state;
    runner.elapsed_offset = runner.state.elapsed_ms;
    runner.iterate()?;
    Ok(runner.finish())
}

struct Thread {
    state: MeshState,
    queue: Vec<Vec<f64>>,
    polled: Vec<usize>,
}

pub(crate) struct Runner<'a> {
    pub(crate) cfg: RunConfig,
    pub(crate) problem: Problem,
    pub(crate) state: RunState,
    pub(crate) unit: Bounds,
    options: RunOptions<'a>,
    started: Instant,
    elapsed_offset: u64,
}

impl<'a> Runner<'a> {
    pub(crate) fn new(cfg: RunConfig, options: RunOptions<'a>) -> Result<Self> {
        let problem = cfg.problem()?;
        let d = problem.dim();
        let state = RunState {
            config: cfg.clone(),
            archive: DesignArchive::new(),
            centroids: Vec::new(),
            iteration: 0,
            waves: 0,
            elapsed_ms: 0,
            trace: RunTrace { dim: d, ..RunTrace::default() },
            model: None,
            settled_reps: 0,
        };
        Ok(Self { cfg, problem, state, unit: Bounds::unit(d), options, started: Instant::now(), elapsed_offset: 0 })
    }

    pub(crate) fn emit(&mut self, event: RunEvent<'_>) {
        if let Some(obs) = self.options.observer.as_mut() {
            obs(&event);
        }
    }

    pub(crate) fn evals(&self) -> usize {
        self.state.archive.total_evaluations()
    }

    pub(crate) fn remaining(&self) -> usize {
        self.cfg.t.saturating_sub(self.evals())
    }

    /// Radius of the density-penalty neighbourhood in unit coordinates.
    pub(crate) fn radius(&self) -> f64 {
        self.cfg.neighborhood_frac * self.unit.diameter()
    }

    pub(crate) fn min_mesh(&self) -> f64 {
        self.cfg.mesh_min_frac * self.unit.diameter()
    }

    pub(crate) fn partition(&self) -> RegionPartition {
        RegionPartition::from_centroids(self.state.centroids.clone())
    }

    pub(crate) fn fit_options(&self, tag: &str) -> FitOptions {
        FitOptions {
            starts: self.cfg.hyper_starts,
            seed: stream_seed(self.cfg.seed, tag, &[self.state.iteration as u64]),
            noise_floor: DEFAULT_NOISE_FLOOR,
        }
    }

    pub(crate) fn batch_options(&self, tag: &str, coords: &[u64]) -> BatchOptions {
        BatchOptions { seed: stream_seed(self.cfg.seed, tag, coords), ..BatchOptions::default() }
    }

    /// Adds (or finds) design points at unit-cube locations.
    pub(crate) fn add_points(&mut self, locations: &[Vec<f64>]) -> Vec<usize> {
        let partition = (!self.state.centroids.is_empty()).then(|| self.partition());
        locations
            .iter()
            .map(|x| {
                let i = self.state.archive.ensure(x);
                if let Some(p) = &partition {
                    self.state.archive.set_region(i, p.region_of(x));
                }
                i
            })
            .collect()
    }

    /// One barrier-synchronized wave: task `j` (one evaluation of point
    /// `tasks[j]`) runs on worker `j mod q`, which draws noise from its own
    /// stream for this wave.
    pub(crate) fn evaluate(&mut self, tasks: &[usize]) {
        if tasks.is_empty() {
            return;
        }
        let q = self.cfg.q.min(tasks.len());
        let wave = self.state.waves;
        self.state.waves += 1;
        let locations: Vec<Vec<f64>> =
            tasks.iter().map(|&i| self.problem.bounds.from_unit(&self.state.archive.point(i).location)).collect();
        let problem = &self.problem;
        let seed = self.cfg.seed;
        let latency = std::time::Duration::from_millis(self.cfg.latency_ms);
        let work = |w: usize| -> Vec<f64> {
            let mut rng = stream(seed, "noise", &[wave, w as u64]);
            (w..locations.len())
                .step_by(q)
                .map(|j| {
                    if !latency.is_zero() {
                        std::thread::sleep(latency);
                    }
                    problem.evaluate_noisy(&locations[j], &mut rng)
                })
                .collect()
        };
        let per_worker: Vec<Vec<f64>> = if q > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..q).map(|w| s.spawn(move || work(w))).collect();
                handles.into_iter().map(|h| h.join().expect("evaluation worker panicked")).collect()
            })
        } else {
            vec![work(0)]
        };
        for (j, &i) in tasks.iter().enumerate() {
            self.state.archive.observe(i, per_worker[j % q][j / q]);
        }
        if self.cfg.use_known_noise {
            for (j, &i) in tasks.iter().enumerate() {
                let sd = self.problem.noise_sd(&locations[j]);
                self.state.archive.set_known_variance(i, sd * sd);
            }
        }
        let load = tasks.len().div_ceil(q) as u64;
        self.state.elapsed_ms += load * self.cfg.sim_eval_ms;
    }

    /// Adds the locations and evaluates each `r` times in one wave, within the
    /// remaining budget: trailing locations that cannot be afforded are dropped and the
    /// last one kept may receive fewer replications.
    pub(crate) fn add_and_evaluate(&mut self, locations: &[Vec<f64>]) -> Vec<usize> {
        let r = self.cfg.r;
        let left = self.remaining();
        let idx = self.add_points(&locations[..locations.len().min(left.div_ceil(r))]);
        let tasks: Vec<usize> =
            idx.iter().enumerate().flat_map(|(j, &i)| std::iter::repeat_n(i, r.min(left - j * r))).collect();
        self.evaluate(&tasks);
        idx
    }

    pub(crate) fn record(&mut self, stage: &str, q_k: &[usize]) {
        let Some(best) = self.state.archive.best_settled_index(self.state.settled_reps) else { return };
        let p = self.state.archive.point(best);
        let x = self.problem.bounds.from_unit(&p.location);
        let elapsed_ms = if self.cfg.wall_clock {
            self.elapsed_offset + self.started.elapsed().as_millis() as u64
        } else {
            self.state.elapsed_ms
        };
        let row = TraceRow {
            iter: self.state.iteration,
            n_points: self.state.archive.len(),
            evals: self.evals(),
            incumbent_mean: self.problem.user_value(p.sample_mean()),
            true_f: self.problem.user_value(self.problem.true_f(&x)),
            relative_error: self.problem.relative_error(&x),
            incumbent: x,
            stage: stage.to_string(),
            q_k: q_k.to_vec(),
            elapsed_ms,
        };
        self.state.trace.rows.push(row);
    }

    pub(crate) fn warn(&mut self, message: String) {
        self.state.trace.warnings.push(format!("iteration {}: {message}", self.state.iteration));
    }

    pub(crate) fn fit(&self, tag: &str) -> Result<AglgpModel> {
        let partition = self.partition();
        let m = self.cfg.m.min(self.state.archive.len());
        let warm = self.state.model.as_ref().map(|s| (&s.global, s.local.as_slice()));
        AglgpModel::fit_warm(&self.state.archive, &partition, m, &self.fit_options(tag), warm)
    }

    /// Initial design, partition, first fit and validation.
    pub(crate) fn initialize(&mut self) -> Result<AglgpModel> {
        let n_0 = self.cfg.n_0();
        let design = latin_hypercube(n_0, &self.unit, &mut stream(self.cfg.seed, "design", &[0]));
        self.add_and_evaluate(&design);
        self.partition_archive(0)?;
        let mut model = self.fit("fit")?;
        let mut diagnostics = model.loocv_validate().ok();
        let extra = (n_0 / 2).max(1);
        if let Some(diag) = &diagnostics {
            if diag.rmse > 0.5 * diag.response_range && extra * self.cfg.r <= self.remaining() {
                self.warn(format!(
                    "cross-validation RMSE {:.4} exceeds half the response range; adding {extra} design points",
                    diag.rmse
                ));
                let more = latin_hypercube(extra, &self.unit, &mut stream(self.cfg.seed, "design", &[1]));
                self.add_and_evaluate(&more);
                self.partition_archive(1)?;
                model = self.fit("fit")?;
                diagnostics = model.loocv_validate().ok();
            }
        }
        self.state.model = Some(model.snapshot());
        let archive = self.state.archive.clone();
        self.emit(RunEvent::Initialized { archive: &archive, loocv: diagnostics.as_ref() });
        self.record("init", &vec![0; self.cfg.k]);
        Ok(model)
    }

    fn partition_archive(&mut self, attempt: u64) -> Result<()> {
        let locs = self.state.archive.locations();
        let partition = partition_space(&locs, self.cfg.k, &mut stream(self.cfg.seed, "kmeans", &[attempt]))?;
        for (i, x) in locs.iter().enumerate() {
            self.state.archive.set_region(i, partition.region_of(x));
        }
        self.state.centroids = partition.centroids;
        Ok(())
    }

    /// The model for the current archive: the stored snapshot when it is
    /// still current, otherwise a warm-started refit. A failed refit falls
    /// back to the previous hyperparameters conditioned on the new data.
    fn current_model(&mut self) -> Result<AglgpModel> {
        if let Some(snap) = &self.state.model {
            if snap.archive_digest == self.state.archive.digest() {
                return AglgpModel::from_snapshot(snap, &self.state.archive, DEFAULT_NOISE_FLOOR);
            }
        }
        match self.fit("fit") {
            Ok(model) => {
                self.state.model = Some(model.snapshot());
                Ok(model)
            }
            Err(e) => {
                let Some(snap) = self.state.model.clone() else { return Err(e) };
                self.warn(format!("model refit failed ({e}); reusing previous hyperparameters"));
                AglgpModel::with_hyperparameters(
                    &self.state.archive,
                    &self.partition(),
                    snap.inducing.clone(),
                    snap.global.clone(),
                    snap.local.clone(),
                    None,
                    DEFAULT_NOISE_FLOOR,
                )
            }
        }
    }

    fn iterate(&mut self) -> Result<()> {
        let mut done = 0;
        while self.evals() < self.cfg.t {
            if self.options.stop_after.is_some_and(|s| done >= s) {
                break;
            }
            self.state.iteration += 1;
            let model = self.current_model()?;
            let penalty = PenaltyState::from_archive(&self.state.archive, self.cfg.v, self.radius());
            let it = self.state.iteration as u64;
            let batch = propose_global_batch(&model, &penalty, self.cfg.q, &self.batch_options("global", &[it]))?;
            self.emit(RunEvent::GlobalBatch { iteration: self.state.iteration, batch: &batch });
            let q_k = batch.region_counts.clone();
            self.local_stage(&model, &q_k)?;
            self.allocation_stage(&q_k);
            let snapshot = self.state.clone();
            self.emit(RunEvent::IterationEnd { state: &snapshot });
            done += 1;
        }
        Ok(())
    }

    /// Mean of the best design point in region `k`, if any.
    fn region_best(&self, partition: &RegionPartition, k: usize) -> Option<f64> {
        self.state
            .archive
            .points()
            .iter()
            .filter(|p| p.replications > 0 && partition.region_of(&p.location) == k)
            .map(|p| p.sample_mean())
            .min_by(f64::total_cmp)
    }

    fn local_stage(&mut self, model: &AglgpModel, q_k: &[usize]) -> Result<()> {
        let partition = model.partition().clone();
        let active: Vec<usize> = (0..q_k.len()).filter(|&k| q_k[k] > 0).collect();
        let mut local_model = model.clone();
        let mut n_t = 0usize;
        let mut restarts = 0usize;
        let min_mesh = self.min_mesh();
        let it = self.state.iteration as u64;
        'stage: loop {
            if self.remaining() == 0 {
                return Ok(());
            }
            let mut seeded = false;
            for &k in &active {
                if self.region_best(&partition, k).is_none() {
                    let x = self.seed_point(&partition, k, restarts);
                    self.add_and_evaluate(&[x]);
                    n_t += 1;
                    seeded = true;
                }
            }
            if restarts > 0 || seeded {
                let opts = self.fit_options("fit-local");
                match local_model.refit_local(&self.state.archive, &active, &opts) {
                    Ok(m) => local_model = m,
                    Err(e) => self.warn(format!("local refit failed ({e}); keeping previous local models")),
                }
            }
            let mut starts: Vec<(usize, Vec<f64>)> = Vec::with_capacity(self.cfg.q);
            for &k in &active {
                let y_min = self.region_best(&partition, k).unwrap_or(f64::INFINITY);
                let opts = self.batch_options("local", &[it, restarts as u64, k as u64]);
                let picks = match propose_local_starts(&local_model, k, q_k[k], y_min, self.radius(), &opts) {
                    Ok(p) => p,
                    Err(e) => {
                        self.warn(format!("region {k}: {e}; starting from its best design points"));
                        self.fallback_starts(&partition, k, q_k[k])
                    }
                };
                starts.extend(picks.into_iter().map(|x| (k, x)));
            }
            let locs: Vec<Vec<f64>> = starts.iter().map(|(_, x)| x.clone()).collect();
            let idx = self.add_and_evaluate(&locs);
            n_t += idx.len();
            self.record("local", q_k);
            let mut threads: Vec<Thread> = starts
                .iter()
                .zip(&idx)
                .map(|((k, x), &i)| {
                    let mesh = self.cfg.initial_mesh_frac * partition.region_box(*k).diameter();
                    let mean = self.state.archive.point(i).sample_mean();
                    Thread { state: MeshState::new(x.clone(), mean, mesh.max(2.0 * min_mesh)), queue: vec![], polled: vec![] }
                })
                .collect();
            loop {
                if n_t >= self.cfg.n_max || self.remaining() == 0 {
                    return Ok(());
                }
                let states: Vec<MeshState> = threads.iter().map(|t| t.state.clone()).collect();
                if is_terminated(&states, min_mesh) {
                    if restarts < self.cfg.restart_cap {
                        restarts += 1;
                        continue 'stage;
                    }
                    return Ok(());
                }
                let mut wave = Vec::with_capacity(threads.len());
                for t in threads.iter_mut() {
                    if t.queue.is_empty() {
                        t.queue = poll_candidates(&t.state, &self.unit);
                        t.queue.reverse();
                    }
                    wave.push(t.queue.pop().expect("poll set is never empty"));
                }
                let idx = self.add_and_evaluate(&wave);
                n_t += idx.len();
                for (t, &i) in threads.iter_mut().zip(&idx) {
                    t.polled.push(i);
                    if t.queue.is_empty() {
                        self.finish_poll(t);
                    }
                }
                self.record("local", q_k);
            }
        }
    }

    fn finish_poll(&self, t: &mut Thread) {
        let archive = &self.state.archive;
        if let Some(i) = archive.find(&t.state.incumbent) {
            t.state.incumbent_mean = archive.point(i).sample_mean();
        }
        let results: Vec<(Vec<f64>, f64)> =
            t.polled.iter().map(|&i| (archive.point(i).location.clone(), archive.point(i).sample_mean())).collect();
        t.state = update_mesh(&t.state, &results);
        t.polled.clear();
    }

    /// A point inside region `k` for a region without design points.
    fn seed_point(&self, partition: &RegionPartition, k: usize, attempt: usize) -> Vec<f64> {
        let mut rng = stream(self.cfg.seed, "seed-region", &[self.state.iteration as u64, attempt as u64, k as u64]);
        latin_hypercube(64, partition.region_box(k), &mut rng)
            .into_iter()
            .find(|x| partition.region_of(x) == k)
            .unwrap_or_else(|| partition.centroids[k].clone())
    }

    fn fallback_starts(&self, partition: &RegionPartition, k: usize, count: usize) -> Vec<Vec<f64>> {
        let mut pts: Vec<_> = self
            .state
            .archive
            .points()
            .iter()
            .filter(|p| p.replications > 0 && partition.region_of(&p.location) == k)
            .collect();
        pts.sort_by(|a, b| a.sample_mean().total_cmp(&b.sample_mean()));
        (0..count).map(|i| pts[i % pts.len()].location.clone()).collect()
    }

    fn allocation_stage(&mut self, q_k: &[usize]) {
        let remaining = self.remaining();
        if remaining == 0 {
            return;
        }
        let budget = ((self.cfg.allocation_fraction * (self.cfg.n_max * self.cfg.r) as f64).floor() as usize).min(remaining);
        let mut plan = plan_stage(&self.state.archive, budget, self.cfg.kappa);
        if let Some(w) = plan.warning.clone() {
            self.warn(w);
        }
        let floor_cost: usize = plan.floor.iter().sum();
        if floor_cost > remaining {
            self.warn(format!(
                "replication floor needs {floor_cost} evaluations but only {remaining} remain; floor truncated"
            ));
            let mut left = remaining;
            for f in plan.floor.iter_mut() {
                let take = (*f).min(left);
                *f = take;
                left -= take;
            }
        }
        let tasks: Vec<usize> =
            plan.combined().iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect();
        self.evaluate(&tasks);
        self.state.settled_reps = min_replications(self.state.archive.len(), self.cfg.kappa);
        let archive = self.state.archive.clone();
        self.emit(RunEvent::Allocated { iteration: self.state.iteration, archive: &archive, plan: &plan });
        self.record("allocation", q_k);
    }

    pub(crate) fn finish(self) -> RunOutcome {
        let archive = &self.state.archive;
        let best = archive.best_settled_index(self.state.settled_reps).expect("a finished run has evaluated points");
        let p = archive.point(best);
        let x = self.problem.bounds.from_unit(&p.location);
        let relative_error = self.problem.relative_error(&x);
        let trace = self.state.trace.clone();
        let summary = RunSummary {
            config: self.cfg.clone(),
            incumbent: x.clone(),
            incumbent_mean: self.problem.user_value(p.sample_mean()),
            incumbent_replications: p.replications,
            true_f: self.problem.user_value(self.problem.true_f(&x)),
            f_star: self.problem.user_value(self.problem.f_star),
            relative_error,
            success: relative_error < self.cfg.success_tol,
            evals_to_success: trace.evals_to_success(self.cfg.success_tol),
            evaluations: archive.total_evaluations(),
            design_points: archive.len(),
            iterations: self.state.iteration,
            elapsed_ms: trace.rows.last().map_or(0, |r| r.elapsed_ms),
            warnings: trace.warnings.clone(),
        };
        RunOutcome { summary, trace, state: self.state }
    }
}
