//! Bounded maximum-likelihood estimation of the hyperparameters.
//!
//! All parameters are searched in log space with a multistart compass search.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::global::GlobalHyper;
use super::kernel::{cross_cov, self_cov};
use super::linalg::{cholesky_adaptive, log_det_from_factor, solve_lower};
use super::local::LocalHyper;
use crate::design::{latin_hypercube, Bounds};

/// Log-space bounds on the standardized scale.
pub const LN_VAR_BOUNDS: (f64, f64) = (-13.815510557964274, 6.907755278982137); // 1e-6 .. 1e3
pub const LN_CORR_BOUNDS: (f64, f64) = (-6.907755278982137, 6.907755278982137); // 1e-3 .. 1e3

const INITIAL_STEP_FRAC: f64 = 0.125;
const STEP_TOL: f64 = 1e-3;
const MAX_EVALS_PER_START: usize = 400;

/// Compass search on a box, opportunistic polling, step halving on failure.
pub fn compass_minimize<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], lower: &[f64], upper: &[f64]) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut x: Vec<f64> = start.iter().enumerate().map(|(j, v)| v.clamp(lower[j], upper[j])).collect();
    let mut fx = f(&x);
    let mut step: Vec<f64> = (0..d).map(|j| INITIAL_STEP_FRAC * (upper[j] - lower[j])).collect();
    let mut evals = 1;
    while evals < MAX_EVALS_PER_START && step.iter().any(|&s| s > STEP_TOL) {
        let mut improved = false;
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (x[j] + sign * step[j]).clamp(lower[j], upper[j]);
                if y[j] == x[j] {
                    continue;
                }
                let fy = f(&y);
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    (x, fx)
}

/// Best of several compass searches started from a Latin hypercube over the
/// box (plus an optional warm start, which replaces the first sample).
pub fn multistart_minimize<F: FnMut(&[f64]) -> f64, R: Rng + ?Sized>(
    mut f: F,
    lower: &[f64],
    upper: &[f64],
    starts: usize,
    warm: Option<Vec<f64>>,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let bounds = Bounds { lower: lower.to_vec(), upper: upper.to_vec() };
    let mut points = latin_hypercube(starts.max(1), &bounds, rng);
    if let Some(w) = warm {
        points[0] = w;
    }
    let mut best = (points[0].clone(), f64::INFINITY);
    for p in &points {
        let (x, fx) = compass_minimize(&mut f, p, lower, upper);
        if fx < best.1 || !best.1.is_finite() && fx.is_finite() {
            best = (x, fx);
        }
    }
    best
}

/// Negative log marginal likelihood of the sparse global model with the mean
/// profiled out by generalized least squares. Returns `(nll, mu)`.
pub fn global_nll(x: &[Vec<f64>], y: &[f64], noise: &[f64], inducing: &[Vec<f64>], sigma2: f64, theta: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    let m = inducing.len();
    let gm = self_cov(inducing, sigma2, theta);
    let (lm, _) = cholesky_adaptive(&gm)?;
    let gmn = cross_cov(inducing, x, sigma2, theta);
    let v = lm.solve_lower_triangular(&gmn)?;
    let sqrt_d: Vec<f64> = (0..n)
        .map(|i| ((sigma2 - v.column(i).norm_squared()).max(0.0) + noise[i]).sqrt())
        .collect();
    let mut vs = v;
    for i in 0..n {
        vs.column_mut(i).scale_mut(1.0 / sqrt_d[i]);
    }
    let b = DMatrix::identity(m, m) + &vs * vs.transpose();
    let lb = b.cholesky()?.l();
    // K^{-1} a = D^{-1/2} (I - Vs' B^{-1} Vs) D^{-1/2} a
    let k_inv = |a: &DVector<f64>| -> DVector<f64> {
        let scaled = DVector::from_iterator(n, (0..n).map(|i| a[i] / sqrt_d[i]));
        let t = &vs * &scaled;
        let s = super::linalg::cholesky_solve(&lb, &t);
        let corr = vs.transpose() * s;
        DVector::from_iterator(n, (0..n).map(|i| (scaled[i] - corr[i]) / sqrt_d[i]))
    };
    let ones = DVector::from_element(n, 1.0);
    let yv = DVector::from_column_slice(y);
    let k1 = k_inv(&ones);
    let ky = k_inv(&yv);
    let denom = k1.sum();
    let mu = if denom > 0.0 { ky.sum() / denom } else { yv.mean() };
    let quad = yv.dot(&ky) - 2.0 * mu * ky.sum() + mu * mu * denom;
    let log_det = 2.0 * sqrt_d.iter().map(|s| s.ln()).sum::<f64>() + log_det_from_factor(&lb);
    let nll = 0.5 * (log_det + quad);
    nll.is_finite().then_some((nll, mu))
}

/// Negative log likelihood of residuals `r` under `N(0, τ²C(α) + Σ)`.
pub fn local_nll(points: &[Vec<f64>], r: &[f64], noise: &[f64], tau2: f64, alpha: &[f64]) -> Option<f64> {
    let mut k = self_cov(points, tau2, alpha);
    for (i, s) in noise.iter().enumerate() {
        k[(i, i)] += s;
    }
    let (l, _) = cholesky_adaptive(&k)?;
    let w = solve_lower(&l, &DVector::from_column_slice(r));
    let nll = 0.5 * (log_det_from_factor(&l) + w.norm_squared());
    nll.is_finite().then_some(nll)
}

fn log_box(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![LN_VAR_BOUNDS.0];
    let mut hi = vec![LN_VAR_BOUNDS.1];
    lo.extend(std::iter::repeat_n(LN_CORR_BOUNDS.0, dim));
    hi.extend(std::iter::repeat_n(LN_CORR_BOUNDS.1, dim));
    (lo, hi)
}

pub fn fit_global<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[f64],
    noise: &[f64],
    inducing: &[Vec<f64>],
    starts: usize,
    warm: Option<&GlobalHyper>,
    rng: &mut R,
) -> GlobalHyper {
    let d = x[0].len();
    let (lo, hi) = log_box(d);
    let objective = |p: &[f64]| {
        let theta: Vec<f64> = p[1..].iter().map(|v| v.exp()).collect();
        global_nll(x, y, noise, inducing, p[0].exp(), &theta).map_or(f64::INFINITY, |(nll, _)| nll)
    };
    let warm = warm.map(|h| std::iter::once(h.sigma2.ln()).chain(h.theta.iter().map(|t| t.ln())).collect());
    let (best, _) = multistart_minimize(objective, &lo, &hi, starts, warm, rng);
    let sigma2 = best[0].exp();
    let theta: Vec<f64> = best[1..].iter().map(|v| v.exp()).collect();
    let mu = global_nll(x, y, noise, inducing, sigma2, &theta)
        .map(|(_, mu)| mu)
        .unwrap_or_else(|| y.iter().sum::<f64>() / y.len() as f64);
    GlobalHyper { mu, sigma2, theta }
}

pub fn fit_local<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    r: &[f64],
    noise: &[f64],
    starts: usize,
    warm: Option<&LocalHyper>,
    rng: &mut R,
) -> LocalHyper {
    let d = points[0].len();
    let (lo, hi) = log_box(d);
    let objective = |p: &[f64]| {
        let alpha: Vec<f64> = p[1..].iter().map(|v| v.exp()).collect();
        local_nll(points, r, noise, p[0].exp(), &alpha).unwrap_or(f64::INFINITY)
    };
    let warm = warm.map(|h| std::iter::once(h.tau2.ln()).chain(h.alpha.iter().map(|t| t.ln())).collect());
    let (best, _) = multistart_minimize(objective, &lo, &hi, starts, warm, rng);
    LocalHyper { tau2: best[0].exp(), alpha: best[1..].iter().map(|v| v.exp()).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compass_finds_bounded_quadratic_minimum() {
        let (x, fx) = compass_minimize(|p| (p[0] - 0.3).powi(2) + (p[1] + 2.0).powi(2), &[0.9, 0.0], &[-1.0, -1.0], &[1.0, 1.0]);
        assert!((x[0] - 0.3).abs() < 2e-3);
        assert_eq!(x[1], -1.0);
        assert!((fx - 1.0).abs() < 1e-4);
    }

    #[test]
    fn global_nll_matches_dense_gaussian_density() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0, (i * i) as f64 / 25.0]).collect();
        let y = [0.3, -0.2, 0.8, 1.1, -0.5, 0.0];
        let noise = [0.1, 0.05, 0.2, 0.1, 0.1, 0.3];
        let inducing = vec![x[1].clone(), x[4].clone()];
        let (s2, theta) = (1.3, [2.0, 0.7]);
        let (nll, mu) = global_nll(&x, &y, &noise, &inducing, s2, &theta).unwrap();

        // Dense route: K = G_nm G_m^{-1} G_mn + Λ + Σ with Λ = diag(G_n - G_nm G_m^{-1} G_mn).
        let gm = self_cov(&inducing, s2, &theta);
        let (lm, jit) = cholesky_adaptive(&gm).unwrap();
        let gm_j = &gm + DMatrix::identity(2, 2) * jit;
        let _ = lm;
        let gnm = cross_cov(&x, &inducing, s2, &theta);
        let low_rank = &gnm * gm_j.try_inverse().unwrap() * gnm.transpose();
        let mut k = low_rank.clone();
        for i in 0..6 {
            k[(i, i)] = low_rank[(i, i)] + (s2 - low_rank[(i, i)]).max(0.0) + noise[i];
        }
        let kinv = k.clone().try_inverse().unwrap();
        let ones = DVector::from_element(6, 1.0);
        let yv = DVector::from_column_slice(&y);
        let mu_dense = (ones.transpose() * &kinv * &yv)[0] / (ones.transpose() * &kinv * &ones)[0];
        let r = &yv - &ones * mu_dense;
        let nll_dense = 0.5 * (k.determinant().ln() + (r.transpose() * &kinv * &r)[0]);
        assert!((mu - mu_dense).abs() < 1e-9);
        assert!((nll - nll_dense).abs() < 1e-9);
    }
}
