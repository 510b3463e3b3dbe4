//! Additive global and local Gaussian process (AGLGP) surrogate.
//!
//! The response is modelled as a sparse global GP over `m` inducing points
//! plus an independent residual GP in each Voronoi region, with known
//! heteroscedastic noise on the sample means:
//!
//! ```text
//! ŷ(x)   = ŷ_g(x) + ŷ_l(x)
//! ŷ_g(x) = μ + g'Q_m⁻¹G_mn(Λ+Σ)⁻¹(y - μ)
//! ŝ_g²   = σ² - g'G_m⁻¹g + g'Q_m⁻¹g
//! ŷ_l(x) = l'(L+Σ)⁻¹(y - ŷ_g(X))
//! ŝ_l²   = τ_k² - l'(L+Σ)⁻¹l,     ŝ_z² = τ_k² - l'L⁻¹l
//! ```
//!
//! Locations are unit-cube coordinates. Responses are standardized for
//! fitting; every [`Prediction`] is reported on the original scale.

mod global;
mod inducing;
mod kernel;
pub(crate) mod linalg;
mod local;
pub mod mle;
mod partition;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use global::{GlobalHyper, GlobalPosterior};
pub use inducing::select_inducing_points;
pub use kernel::{cov_vector, cross_cov, gaussian_correlation, self_cov};
pub use local::{LocalHyper, LocalPosterior};
pub use partition::{partition_space, RegionPartition};

use crate::archive::DesignArchive;
use crate::design::Bounds;
use crate::error::{PgloError, Result};
use crate::rng::stream;

pub const DEFAULT_NOISE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Multistart count for each likelihood maximization.
    pub starts: usize,
    pub seed: u64,
    /// Floor on per-point noise variances (original units).
    pub noise_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 5, seed: 0, noise_floor: DEFAULT_NOISE_FLOOR }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

impl Standardization {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let sd = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 };
        Self { mean, sd }
    }
}

/// Model inputs on the standardized scale.
#[derive(Debug, Clone)]
pub struct ModelData {
    pub x: Vec<Vec<f64>>,
    /// Standardized sample means.
    pub y: Vec<f64>,
    /// Standardized noise variances of the sample means.
    pub noise: Vec<f64>,
    pub regions: Vec<usize>,
    /// Sample means on the original scale.
    pub means: Vec<f64>,
}

impl ModelData {
    fn from_archive(archive: &DesignArchive, partition: &RegionPartition, st: Standardization, noise_floor: f64) -> Self {
        let x = archive.locations();
        let means = archive.means();
        let y = means.iter().map(|m| (m - st.mean) / st.sd).collect();
        let noise = archive
            .noise_variances(noise_floor)
            .into_iter()
            .zip(archive.points())
            .map(|(v, p)| v / p.replications.max(1) as f64 / (st.sd * st.sd))
            .collect();
        let regions = x.iter().map(|p| partition.region_of(p)).collect();
        Self { x, y, noise, regions, means }
    }
}

/// Full AGLGP prediction at one location (original response scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean_global: f64,
    pub var_global: f64,
    pub mean_local: f64,
    pub var_local: f64,
    pub mean_overall: f64,
    /// Local spatial variance `τ_k² - l'L⁻¹l` (no observation noise).
    pub var_z: f64,
    /// `mean_overall` clamped to the predictor bounds.
    pub mean_bounded: f64,
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvDiagnostics {
    pub rmse: f64,
    /// Fraction of standardized residuals inside `[-3, 3]`.
    pub within_three: f64,
    pub standardized_residuals: Vec<f64>,
    pub response_range: f64,
}

/// A fitted AGLGP model. Immutable once built.
#[derive(Debug, Clone)]
pub struct AglgpModel {
    partition: RegionPartition,
    standardization: Standardization,
    data: ModelData,
    global: GlobalPosterior,
    locals: Vec<LocalPosterior>,
    members: Vec<Vec<usize>>,
    bounds: (f64, f64),
    archive_digest: String,
}

fn region_members(regions: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &r) in regions.iter().enumerate() {
        members[r].push(i);
    }
    members
}

fn predictor_bounds(means: &[f64]) -> (f64, f64) {
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    (lo - 3.0 * range, hi + 3.0 * range)
}

impl AglgpModel {
    /// Fits hyperparameters by bounded maximum likelihood and builds the model.
    pub fn fit(archive: &DesignArchive, partition: &RegionPartition, m: usize, options: &FitOptions) -> Result<Self> {
        Self::fit_from(archive, partition, m, options, None)
    }

    /// As [`fit`](Self::fit), using `previous` hyperparameters as one of the
    /// likelihood starting points.
    pub fn fit_from(
        archive: &DesignArchive,
        partition: &RegionPartition,
        m: usize,
        options: &FitOptions,
        previous: Option<&AglgpModel>,
    ) -> Result<Self> {
        let locals = previous.map(|p| p.local_hypers());
        let warm = previous.map(|p| (&p.global.hyper, locals.as_deref().unwrap_or(&[])));
        Self::fit_warm(archive, partition, m, options, warm)
    }

    /// As [`fit`](Self::fit), with explicit warm-start hyperparameters
    /// (global, then one set per region).
    pub fn fit_warm(
        archive: &DesignArchive,
        partition: &RegionPartition,
        m: usize,
        options: &FitOptions,
        warm: Option<(&GlobalHyper, &[LocalHyper])>,
    ) -> Result<Self> {
        let n = archive.len();
        if n == 0 {
            return Err(PgloError::config("cannot fit a model to an empty archive"));
        }
        if m == 0 || m > n {
            return Err(PgloError::config(format!("m = {m} inducing points needs 1 ≤ m ≤ {n}")));
        }
        let st = Standardization::from_values(&archive.means());
        let data = ModelData::from_archive(archive, partition, st, options.noise_floor);
        let inducing = select_inducing_points(&data.x, m, &mut stream(options.seed, "inducing", &[n as u64]))?;
        let mut rng = stream(options.seed, "hyper", &[n as u64]);
        let warm_global = warm.map(|(g, _)| g.clone());
        let mut global_hyper =
            mle::fit_global(&data.x, &data.y, &data.noise, &inducing, options.starts, warm_global.as_ref(), &mut rng);
        if !global_hyper.mu.is_finite() {
            global_hyper.mu = 0.0;
        }
        let global = GlobalPosterior::build(global_hyper, inducing, &data.x, &data.y, &data.noise, None)
            .ok_or_else(|| PgloError::ModelFit { region: None, message: "global covariance not positive definite".into() })?;
        let members = region_members(&data.regions, partition.k());
        let resid = residuals(&global, &data);
        let mut local_hypers = Vec::with_capacity(partition.k());
        for (k, idx) in members.iter().enumerate() {
            let warm = warm.and_then(|(_, l)| l.get(k)).cloned();
            local_hypers.push(estimate_local(&data, &resid, idx, options.starts, warm.as_ref(), &global.hyper, &mut rng));
        }
        Self::assemble(partition.clone(), st, data, global, local_hypers, archive.digest())
    }

    /// Builds a model from given hyperparameters and inducing points, with no
    /// estimation. `standardization = None` derives it from the archive.
    pub fn with_hyperparameters(
        archive: &DesignArchive,
        partition: &RegionPartition,
        inducing: Vec<Vec<f64>>,
        global_hyper: GlobalHyper,
        local_hypers: Vec<LocalHyper>,
        standardization: Option<Standardization>,
        noise_floor: f64,
    ) -> Result<Self> {
        if local_hypers.len() != partition.k() {
            return Err(PgloError::config("one local hyperparameter set is needed per region"));
        }
        if global_hyper.sigma2 <= 0.0 || global_hyper.theta.iter().any(|t| *t <= 0.0) {
            return Err(PgloError::config("global variance and sensitivities must be positive"));
        }
        if local_hypers.iter().any(|h| h.tau2 <= 0.0 || h.alpha.iter().any(|a| *a <= 0.0)) {
            return Err(PgloError::config("local variances and sensitivities must be positive"));
        }
        let st = standardization.unwrap_or_else(|| Standardization::from_values(&archive.means()));
        let data = ModelData::from_archive(archive, partition, st, noise_floor);
        let global = GlobalPosterior::build(global_hyper, inducing, &data.x, &data.y, &data.noise, None)
            .ok_or_else(|| PgloError::ModelFit { region: None, message: "global covariance not positive definite".into() })?;
        Self::assemble(partition.clone(), st, data, global, local_hypers, archive.digest())
    }

    /// Conditions on the current archive keeping the global hyperparameters,
    /// inducing set and standardization; re-estimates local hyperparameters
    /// only in `regions`.
    pub fn refit_local(&self, archive: &DesignArchive, regions: &[usize], options: &FitOptions) -> Result<Self> {
        let st = self.standardization;
        let data = ModelData::from_archive(archive, &self.partition, st, options.noise_floor);
        let global = GlobalPosterior::build(
            self.global.hyper.clone(),
            self.global.inducing.clone(),
            &data.x,
            &data.y,
            &data.noise,
            None,
        )
        .ok_or_else(|| PgloError::ModelFit { region: None, message: "global covariance not positive definite".into() })?;
        let members = region_members(&data.regions, self.partition.k());
        let resid = residuals(&global, &data);
        let mut rng = stream(options.seed, "hyper-local", &[data.x.len() as u64]);
        let hypers = (0..self.partition.k())
            .map(|k| {
                if regions.contains(&k) {
                    estimate_local(&data, &resid, &members[k], options.starts, Some(&self.locals[k].hyper), &global.hyper, &mut rng)
                } else {
                    self.locals[k].hyper.clone()
                }
            })
            .collect();
        Self::assemble(self.partition.clone(), st, data, global, hypers, archive.digest())
    }

    fn assemble(
        partition: RegionPartition,
        standardization: Standardization,
        data: ModelData,
        global: GlobalPosterior,
        local_hypers: Vec<LocalHyper>,
        archive_digest: String,
    ) -> Result<Self> {
        let members = region_members(&data.regions, partition.k());
        let resid = residuals(&global, &data);
        let mut locals = Vec::with_capacity(partition.k());
        for (k, hyper) in local_hypers.into_iter().enumerate() {
            let idx = &members[k];
            let pts: Vec<Vec<f64>> = idx.iter().map(|&i| data.x[i].clone()).collect();
            let r: Vec<f64> = idx.iter().map(|&i| resid[i]).collect();
            let s: Vec<f64> = idx.iter().map(|&i| data.noise[i]).collect();
            let local = LocalPosterior::build(hyper, pts, &r, &s, None).ok_or_else(|| PgloError::ModelFit {
                region: Some(k),
                message: "local covariance not positive definite after jitter escalation".into(),
            })?;
            locals.push(local);
        }
        let bounds = predictor_bounds(&data.means);
        Ok(Self { partition, standardization, data, global, locals, members, bounds, archive_digest })
    }

    /// Predicts at `x` (unit-cube coordinates).
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if !Bounds::unit(self.dim()).contains(x) {
            return Err(PgloError::domain(format!("location {x:?} lies outside the domain")));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> Prediction {
        let (gm, gv) = self.global.predict(x);
        let region = self.partition.region_of(x);
        let (lm, lv, zv) = self.locals[region].predict(x);
        self.compose(gm, gv, lm, lv, zv, region)
    }

    /// Converts standardized components into a [`Prediction`].
    pub(crate) fn compose(&self, gm: f64, gv: f64, lm: f64, lv: f64, zv: f64, region: usize) -> Prediction {
        let Standardization { mean, sd } = self.standardization;
        let mean_global = mean + sd * gm;
        let mean_local = sd * lm;
        let mean_overall = mean_global + mean_local;
        Prediction {
            mean_global,
            var_global: sd * sd * gv,
            mean_local,
            var_local: sd * sd * lv,
            mean_overall,
            var_z: sd * sd * zv,
            mean_bounded: mean_overall.clamp(self.bounds.0, self.bounds.1),
            region,
        }
    }

    /// Refit-free leave-one-out diagnostics: each point is removed from its
    /// local model's data while hyperparameters and the global fit stay fixed.
    pub fn loocv_validate(&self) -> Result<LoocvDiagnostics> {
        let n = self.data.x.len();
        if n < 3 {
            return Err(PgloError::config("leave-one-out validation needs at least 3 design points"));
        }
        let sd = self.standardization.sd;
        let mut sq = 0.0;
        let mut z = vec![0.0; n];
        for (k, idx) in self.members.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let (kinv, gamma) = self.locals[k].inverse_and_weights();
            for (j, &i) in idx.iter().enumerate() {
                let err = gamma[j] / kinv[(j, j)];
                let var = 1.0 / kinv[(j, j)] + self.global.predict(&self.data.x[i]).1;
                sq += (err * sd).powi(2);
                z[i] = err / var.sqrt();
            }
        }
        let lo = self.data.means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.data.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(LoocvDiagnostics {
            rmse: (sq / n as f64).sqrt(),
            within_three: z.iter().filter(|v| v.abs() <= 3.0).count() as f64 / n as f64,
            standardized_residuals: z,
            response_range: hi - lo,
        })
    }

    /// Explicit `Q_m` on the standardized scale.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        self.global.q_matrix(&self.data.x)
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn partition(&self) -> &RegionPartition {
        &self.partition
    }

    pub fn region_of(&self, x: &[f64]) -> usize {
        self.partition.region_of(x)
    }

    pub fn data(&self) -> &ModelData {
        &self.data
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn global(&self) -> &GlobalPosterior {
        &self.global
    }

    pub fn local(&self, k: usize) -> &LocalPosterior {
        &self.locals[k]
    }

    pub fn inducing(&self) -> &[Vec<f64>] {
        &self.global.inducing
    }

    pub fn global_hyper(&self) -> &GlobalHyper {
        &self.global.hyper
    }

    pub fn local_hypers(&self) -> Vec<LocalHyper> {
        self.locals.iter().map(|l| l.hyper.clone()).collect()
    }

    /// Design-point indices in region `k`.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    /// Predictor bounds `[M̲, M̄]`.
    pub fn predictor_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn archive_digest(&self) -> &str {
        &self.archive_digest
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            dim: self.dim(),
            n_points: self.data.x.len(),
            standardization: self.standardization,
            global: self.global.hyper.clone(),
            local: self.local_hypers(),
            inducing: self.global.inducing.clone(),
            centroids: self.partition.centroids.clone(),
            predictor_bounds: self.bounds,
            archive_digest: self.archive_digest.clone(),
        }
    }

    /// Rebuilds a model from a snapshot and the archive it was fitted on.
    pub fn from_snapshot(snapshot: &ModelSnapshot, archive: &DesignArchive, noise_floor: f64) -> Result<Self> {
        if snapshot.format != SNAPSHOT_FORMAT {
            return Err(PgloError::config(format!("unsupported model snapshot format '{}'", snapshot.format)));
        }
        if archive.digest() != snapshot.archive_digest {
            return Err(PgloError::config("archive digest does not match the model snapshot"));
        }
        let partition = RegionPartition::from_centroids(snapshot.centroids.clone());
        Self::with_hyperparameters(
            archive,
            &partition,
            snapshot.inducing.clone(),
            snapshot.global.clone(),
            snapshot.local.clone(),
            Some(snapshot.standardization),
            noise_floor,
        )
    }
}

fn residuals(global: &GlobalPosterior, data: &ModelData) -> Vec<f64> {
    data.x.iter().zip(&data.y).map(|(x, y)| y - global.predict(x).0).collect()
}

fn estimate_local<R: rand::Rng + ?Sized>(
    data: &ModelData,
    resid: &[f64],
    idx: &[usize],
    starts: usize,
    warm: Option<&LocalHyper>,
    global: &GlobalHyper,
    rng: &mut R,
) -> LocalHyper {
    if idx.is_empty() {
        return warm.cloned().unwrap_or(LocalHyper { tau2: global.sigma2.max(1e-6), alpha: global.theta.clone() });
    }
    let pts: Vec<Vec<f64>> = idx.iter().map(|&i| data.x[i].clone()).collect();
    let r: Vec<f64> = idx.iter().map(|&i| resid[i]).collect();
    let s: Vec<f64> = idx.iter().map(|&i| data.noise[i]).collect();
    mle::fit_local(&pts, &r, &s, starts, warm, rng)
}

pub const SNAPSHOT_FORMAT: &str = "aglgp-model/1";

/// Self-describing JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub format: String,
    pub dim: usize,
    pub n_points: usize,
    pub standardization: Standardization,
    pub global: GlobalHyper,
    pub local: Vec<LocalHyper>,
    pub inducing: Vec<Vec<f64>>,
    pub centroids: Vec<Vec<f64>>,
    pub predictor_bounds: (f64, f64),
    pub archive_digest: String,
}
