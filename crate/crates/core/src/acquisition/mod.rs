//! Expected-improvement criteria and batch construction.
//!
//! `gei` scores a location under the global model alone, damped by a density
//! penalty on already-sampled neighbourhoods; `mei` scores a location under
//! the full model using the spatial variance `ŝ_z²`, which ignores noise.
//! Batches are built greedily with kriging-believer updates.

mod batch;
mod maximize;

pub use batch::{
    maximize_gei, propose_global_batch, propose_local_starts, qgei_monte_carlo, BatchOptions, DomainStartSequence,
    GlobalCandidateBatch,
};
pub use maximize::{maximize_acquisition, MaximizeOptions};

use serde::{Deserialize, Serialize};

use crate::archive::DesignArchive;
use crate::design::squared_distance;
use crate::surrogate::{AglgpModel, Prediction};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max(y_min - Y, 0)]` for `Y ~ N(mean, sd²)`.
pub fn expected_improvement(mean: f64, sd: f64, y_min: f64) -> f64 {
    let gap = y_min - mean;
    if !(sd > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Modified EI: bounded overall mean with the noise-free spatial variance.
pub fn mei(prediction: &Prediction, y_min: f64) -> f64 {
    expected_improvement(prediction.mean_bounded, prediction.var_z.sqrt(), y_min)
}

/// `1 / (1 + exp(n_a / v - 5))`.
pub fn penalty_factor(n_a: f64, v: f64) -> f64 {
    1.0 / (1.0 + (n_a / v - 5.0).exp())
}

/// Sampled locations and artificial neighbours feeding the density penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyState {
    pub v: f64,
    /// Neighbourhood radius (unit-cube distance).
    pub a: f64,
    sites: Vec<Vec<f64>>,
    artificial: Vec<(Vec<f64>, f64)>,
}

impl PenaltyState {
    pub fn new(v: f64, a: f64, sites: Vec<Vec<f64>>) -> Self {
        Self { v, a, sites, artificial: Vec::new() }
    }

    /// Counts every archived design point as a neighbour site.
    pub fn from_archive(archive: &DesignArchive, v: f64, a: f64) -> Self {
        Self::new(v, a, archive.locations())
    }

    /// `n_a(x)`: sites within distance `a` of `x`, plus artificial weight.
    pub fn neighbor_count(&self, x: &[f64]) -> f64 {
        let a2 = self.a * self.a;
        let real = self.sites.iter().filter(|s| squared_distance(s, x) <= a2).count() as f64;
        let fake: f64 = self.artificial.iter().filter(|(s, _)| squared_distance(s, x) <= a2).map(|(_, w)| w).sum();
        real + fake
    }

    pub fn factor(&self, x: &[f64]) -> f64 {
        penalty_factor(self.neighbor_count(x), self.v)
    }

    /// Adds `count` artificial neighbours located at `x`.
    pub fn add_artificial(&mut self, x: &[f64], count: f64) {
        self.artificial.push((x.to_vec(), count));
    }
}

/// Unpenalized global EI at `x` on the original scale.
pub fn global_ei(model: &AglgpModel, x: &[f64], y_gmin: f64) -> f64 {
    batch::global_ei_with(model, model.global(), x, y_gmin)
}

/// Penalized global EI.
pub fn gei(x: &[f64], model: &AglgpModel, y_gmin: f64, penalty: &PenaltyState) -> f64 {
    global_ei(model, x, y_gmin) * penalty.factor(x)
}

/// Smallest global mean over the inducing points (original scale).
pub fn global_min_at_inducing(model: &AglgpModel) -> f64 {
    batch::inducing_min(model, model.global())
}
