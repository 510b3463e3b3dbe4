//! Sparse global GP over inducing points (standardized response units).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{cov_vector, cross_cov, self_cov};
use super::linalg::{cholesky_adaptive, cholesky_solve, cholesky_with, solve_lower};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalHyper {
    pub mu: f64,
    pub sigma2: f64,
    pub theta: Vec<f64>,
}

/// Factorized global posterior.
///
/// With `G_m = Lm Lm'` and `V = Lm^{-1} G_mn`, the matrix
/// `Q_m = G_m + G_mn (Λ+Σ)^{-1} G_nm` equals `Lm B Lm'` where
/// `B = I + V (Λ+Σ)^{-1} V'`. Only `Lm` and the factor of `B` are kept.
#[derive(Debug, Clone)]
pub struct GlobalPosterior {
    pub hyper: GlobalHyper,
    pub inducing: Vec<Vec<f64>>,
    pub jitter: f64,
    lm: DMatrix<f64>,
    b: DMatrix<f64>,
    lb: DMatrix<f64>,
    rhs: DVector<f64>,
    beta: DVector<f64>,
    /// `Λ_i + Σ_i` for every conditioning point (data first, then believer points).
    diag: Vec<f64>,
}

impl GlobalPosterior {
    /// Conditions the global model on `(x_i, y_i)` with noise variances `noise_i`.
    /// `jitter = None` selects the adaptive jitter schedule for `G_m`.
    pub fn build(
        hyper: GlobalHyper,
        inducing: Vec<Vec<f64>>,
        x: &[Vec<f64>],
        y: &[f64],
        noise: &[f64],
        jitter: Option<f64>,
    ) -> Option<Self> {
        let gm = self_cov(&inducing, hyper.sigma2, &hyper.theta);
        let (lm, jitter) = match jitter {
            Some(j) => (cholesky_with(&gm, j)?, j),
            None => cholesky_adaptive(&gm)?,
        };
        let m = inducing.len();
        let gmn = cross_cov(&inducing, x, hyper.sigma2, &hyper.theta);
        let v = lm.solve_lower_triangular(&gmn)?;
        let n = x.len();
        let diag: Vec<f64> = (0..n)
            .map(|i| (hyper.sigma2 - v.column(i).norm_squared()).max(0.0) + noise[i])
            .collect();
        let mut scaled = v.clone();
        let mut rhs = DVector::zeros(m);
        for i in 0..n {
            let w = (y[i] - hyper.mu) / diag[i];
            rhs.axpy(w, &v.column(i), 1.0);
            scaled.column_mut(i).scale_mut(1.0 / diag[i].sqrt());
        }
        let b = DMatrix::identity(m, m) + &scaled * scaled.transpose();
        let lb = b.clone().cholesky()?.l();
        let beta = cholesky_solve(&lb, &rhs);
        Some(Self { hyper, inducing, jitter, lm, b, lb, rhs, beta, diag })
    }

    /// Posterior mean and variance at `x` (standardized units). The variance
    /// is `σ² - g'G_m^{-1}g + g'Q_m^{-1}g`, floored at zero.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let g = cov_vector(x, &self.inducing, self.hyper.sigma2, &self.hyper.theta);
        let u = solve_lower(&self.lm, &g);
        let mean = self.hyper.mu + u.dot(&self.beta);
        let w = solve_lower(&self.lb, &u);
        let var = self.hyper.sigma2 - u.norm_squared() + w.norm_squared();
        (mean, var.max(0.0))
    }

    /// Posterior covariance between the global process at `a` and at `b`.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let ua = solve_lower(&self.lm, &cov_vector(a, &self.inducing, self.hyper.sigma2, &self.hyper.theta));
        let ub = solve_lower(&self.lm, &cov_vector(b, &self.inducing, self.hyper.sigma2, &self.hyper.theta));
        let prior = self.hyper.sigma2 * super::kernel::gaussian_correlation(a, b, &self.hyper.theta);
        prior - ua.dot(&ub) + solve_lower(&self.lb, &ua).dot(&solve_lower(&self.lb, &ub))
    }

    /// Kriging-believer update: treats `y` as observed at `x` with `noise`.
    pub fn condition(&mut self, x: &[f64], y: f64, noise: f64) {
        let g = cov_vector(x, &self.inducing, self.hyper.sigma2, &self.hyper.theta);
        let v = solve_lower(&self.lm, &g);
        let d = (self.hyper.sigma2 - v.norm_squared()).max(0.0) + noise;
        self.b += &v * v.transpose() / d;
        self.rhs.axpy((y - self.hyper.mu) / d, &v, 1.0);
        if let Some(c) = self.b.clone().cholesky() {
            self.lb = c.l();
            self.beta = cholesky_solve(&self.lb, &self.rhs);
            self.diag.push(d);
        } else {
            // Undo: the update made B numerically indefinite.
            self.b -= &v * v.transpose() / d;
            self.rhs.axpy(-(y - self.hyper.mu) / d, &v, 1.0);
        }
    }

    /// Global mean at each inducing point.
    pub fn inducing_means(&self) -> Vec<f64> {
        self.inducing.iter().map(|z| self.predict(z).0).collect()
    }

    /// Explicit `Q_m = G_m + G_mn (Λ+Σ)^{-1} G_nm` over the data points.
    pub fn q_matrix(&self, x: &[Vec<f64>]) -> DMatrix<f64> {
        let mut gm = self_cov(&self.inducing, self.hyper.sigma2, &self.hyper.theta);
        for i in 0..gm.nrows() {
            gm[(i, i)] += self.jitter;
        }
        let gmn = cross_cov(&self.inducing, x, self.hyper.sigma2, &self.hyper.theta);
        let mut weighted = gmn.clone();
        for i in 0..x.len() {
            weighted.column_mut(i).scale_mut(1.0 / self.diag[i]);
        }
        gm + weighted * gmn.transpose()
    }

    /// `Λ_i + Σ_i` at the data points.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}
