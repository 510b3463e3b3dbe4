//! Replication allocation after each local search stage: a minimum
//! replication floor `ceil(κ·N_t)` first, then OCBA on the remaining budget.

use serde::{Deserialize, Serialize};

use crate::archive::DesignArchive;

/// Added replications per design point for one allocation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub replications: Vec<usize>,
    pub budget: usize,
    pub best_index: usize,
}

impl AllocationPlan {
    pub fn total(&self) -> usize {
        self.replications.iter().sum()
    }
}

/// Floor top-up followed by OCBA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub floor: Vec<usize>,
    pub ocba: AllocationPlan,
    pub warning: Option<String>,
}

impl StagePlan {
    /// Combined added replications per point.
    pub fn combined(&self) -> Vec<usize> {
        self.floor.iter().zip(&self.ocba.replications).map(|(a, b)| a + b).collect()
    }

    pub fn total(&self) -> usize {
        self.floor.iter().sum::<usize>() + self.ocba.total()
    }
}

/// `ceil(κ·N_t)`.
pub fn min_replications(n_t: usize, kappa: f64) -> usize {
    (kappa * n_t as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Replications each point lacks to reach `ceil(κ·N_t)`.
pub fn enforce_min_replications(archive: &DesignArchive, kappa: f64) -> Vec<usize> {
    let need = min_replications(archive.len(), kappa);
    archive.points().iter().map(|p| need.saturating_sub(p.replications)).collect()
}

/// Continuous OCBA proportions (unnormalized) for `means` with noise
/// standard deviations `sds`; `best` is the index of the smallest mean.
pub fn ocba_weights(means: &[f64], sds: &[f64], best: usize) -> Vec<f64> {
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-8 * if hi > lo { hi - lo } else { 1.0 };
    let mut w: Vec<f64> = means
        .iter()
        .zip(sds)
        .enumerate()
        .map(|(i, (m, s))| {
            if i == best {
                0.0
            } else {
                let delta = (m - means[best]).max(eps);
                (s / delta).powi(2)
            }
        })
        .collect();
    let sum_sq: f64 = w
        .iter()
        .zip(sds)
        .enumerate()
        .filter(|(i, (_, s))| *i != best && **s > 0.0)
        .map(|(_, (wi, s))| (wi / s).powi(2))
        .sum();
    w[best] = sds[best] * sum_sq.sqrt();
    w
}

/// Splits `budget` added replications across the archive by the OCBA rule.
/// Rounding leftovers go to the best point.
pub fn ocba_allocate(archive: &DesignArchive, budget: usize) -> AllocationPlan {
    let n = archive.len();
    let best = archive.best_index().unwrap_or(0);
    let mut replications = vec![0; n];
    if budget == 0 || n == 0 {
        return AllocationPlan { replications, budget, best_index: best };
    }
    let sds: Vec<f64> = archive.noise_variances(0.0).into_iter().map(f64::sqrt).collect();
    let w = ocba_weights(&archive.means(), &sds, best);
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        for (r, wi) in replications.iter_mut().zip(&w) {
            *r = (budget as f64 * wi / total).floor() as usize;
        }
    }
    let used: usize = replications.iter().sum();
    replications[best] += budget.saturating_sub(used);
    AllocationPlan { replications, budget, best_index: best }
}

/// One allocation stage with budget `budget`: the floor always applies, OCBA
/// receives whatever remains. OCBA weights depend only on means and noise
/// levels, so they are computed before the floor replications run.
pub fn plan_stage(archive: &DesignArchive, budget: usize, kappa: f64) -> StagePlan {
    let floor = enforce_min_replications(archive, kappa);
    let cost: usize = floor.iter().sum();
    let warning = (cost > budget).then(|| {
        format!("replication floor needs {cost} evaluations, above the allocation budget {budget}")
    });
    let ocba = ocba_allocate(archive, budget.saturating_sub(cost));
    StagePlan { floor, ocba, warning }
}
