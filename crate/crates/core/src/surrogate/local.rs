//! Per-region residual GP (standardized response units).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{cov_vector, self_cov};
use super::linalg::{cholesky_adaptive, cholesky_append, cholesky_inverse, cholesky_solve, cholesky_with, solve_lower};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalHyper {
    pub tau2: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LocalPosterior {
    pub hyper: LocalHyper,
    pub points: Vec<Vec<f64>>,
    resid: DVector<f64>,
    /// Jitter added to `L + Σ`.
    pub jitter: f64,
    /// Jitter added to the noise-free `L`.
    pub spatial_jitter: f64,
    l_noisy: DMatrix<f64>,
    l_spatial: DMatrix<f64>,
    gamma: DVector<f64>,
}

impl LocalPosterior {
    /// `jitters = None` selects the adaptive schedule for both factors.
    pub fn build(
        hyper: LocalHyper,
        points: Vec<Vec<f64>>,
        resid: &[f64],
        noise: &[f64],
        jitters: Option<(f64, f64)>,
    ) -> Option<Self> {
        let cov = self_cov(&points, hyper.tau2, &hyper.alpha);
        let mut noisy = cov.clone();
        for (i, s) in noise.iter().enumerate() {
            noisy[(i, i)] += s;
        }
        let ((l_noisy, jitter), (l_spatial, spatial_jitter)) = match jitters {
            Some((a, b)) => ((cholesky_with(&noisy, a)?, a), (cholesky_with(&cov, b)?, b)),
            None => (cholesky_adaptive(&noisy)?, cholesky_adaptive(&cov)?),
        };
        let resid = DVector::from_column_slice(resid);
        let gamma = cholesky_solve(&l_noisy, &resid);
        Some(Self { hyper, points, resid, jitter, spatial_jitter, l_noisy, l_spatial, gamma })
    }

    /// Local mean, local variance `τ² - l'(L+Σ)^{-1}l` and spatial variance
    /// `τ² - l'L^{-1}l`, both floored at zero.
    pub fn predict(&self, x: &[f64]) -> (f64, f64, f64) {
        if self.points.is_empty() {
            return (0.0, self.hyper.tau2, self.hyper.tau2);
        }
        let l = cov_vector(x, &self.points, self.hyper.tau2, &self.hyper.alpha);
        let mean = l.dot(&self.gamma);
        let var_l = self.hyper.tau2 - solve_lower(&self.l_noisy, &l).norm_squared();
        let var_z = self.hyper.tau2 - solve_lower(&self.l_spatial, &l).norm_squared();
        (mean, var_l.max(0.0), var_z.max(0.0))
    }

    /// Kriging-believer update with residual `r` observed at `x`.
    /// Returns false when `x` is numerically already part of the data.
    pub fn condition(&mut self, x: &[f64], r: f64, noise: f64) -> bool {
        let l = cov_vector(x, &self.points, self.hyper.tau2, &self.hyper.alpha);
        let tau2 = self.hyper.tau2;
        let noisy = cholesky_append(&self.l_noisy, &l, tau2 + noise + self.jitter);
        let spatial = cholesky_append(&self.l_spatial, &l, tau2 + noise + self.spatial_jitter);
        match (noisy, spatial) {
            (Some(a), Some(b)) => {
                self.l_noisy = a;
                self.l_spatial = b;
                self.points.push(x.to_vec());
                let mut resid = self.resid.as_slice().to_vec();
                resid.push(r);
                self.resid = DVector::from_vec(resid);
                self.gamma = cholesky_solve(&self.l_noisy, &self.resid);
                true
            }
            _ => false,
        }
    }

    /// `(L+Σ)^{-1}` and `(L+Σ)^{-1} r` for leave-one-out formulas.
    pub fn inverse_and_weights(&self) -> (DMatrix<f64>, DVector<f64>) {
        (cholesky_inverse(&self.l_noisy), self.gamma.clone())
    }
}
