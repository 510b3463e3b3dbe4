//! Benchmark objectives with analytic noise.
//!
//! Every problem is minimized internally. Problems whose natural form is a
//! maximization (the two-peak `sun` surface) are wrapped as `-f`; the
//! user-facing value flips the sign back.

use std::f64::consts::{E, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::Bounds;
use crate::error::{PgloError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sun,
    Griewank,
    Ackley,
    Levy,
    Schwefel,
    Paper1d,
    Quadratic,
}

pub const PROBLEM_NAMES: [&str; 7] = ["sun", "griewank", "ackley", "levy", "schwefel", "paper1d", "quadratic"];

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub kind: Kind,
    pub bounds: Bounds,
    /// True when the user-facing objective is maximized.
    pub maximize: bool,
    /// Optimum of the minimized objective.
    pub f_star: f64,
    pub optima: Vec<Vec<f64>>,
    /// Range of the objective over the box.
    pub range: f64,
    noise: NoiseField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NoiseField {
    /// Heteroscedastic `sd = scale·sqrt(3)(1 + x1/100)(1 + x2/100)`.
    Sun { scale: f64 },
    Constant(f64),
}

/// The two-peak surface on `[0,100]²` with maximum 20 at (90, 90).
pub fn sun_function(x1: f64, x2: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&x1) || !(0.0..=100.0).contains(&x2) {
        return Err(PgloError::domain(format!("({x1}, {x2}) lies outside [0, 100]²")));
    }
    Ok(sun_term(x1) + sun_term(x2))
}

fn sun_term(x: f64) -> f64 {
    10.0 * (0.05 * PI * x).sin().powi(6) / 2f64.powf(((x - 90.0) / 50.0).powi(2))
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
    1.0 + sum - prod
}

pub fn ackley(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let sq = (x.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * sq).exp() - cs.exp() + 20.0 + E
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let mut s = (PI * w[0]).sin().powi(2);
    for wi in &w[..d - 1] {
        s += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
    }
    s + (w[d - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[d - 1]).sin().powi(2))
}

pub fn schwefel(x: &[f64]) -> f64 {
    418.982_887_272_433_9 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

/// `(2x + 9.96)·cos(13x - 0.26)` on `[0, 1]`.
pub fn paper1d(x: f64) -> f64 {
    (2.0 * x + 9.96) * (13.0 * x - 0.26).cos()
}

fn grid_range<F: Fn(&[f64]) -> f64>(f: F, bounds: &Bounds) -> (f64, f64, Vec<f64>) {
    let d = bounds.dim();
    let per_axis = if d <= 2 { 201 } else { ((40401f64).powf(1.0 / d as f64).floor() as usize).max(3) };
    let total = per_axis.pow(d as u32);
    let (mut lo, mut hi, mut arg) = (f64::INFINITY, f64::NEG_INFINITY, vec![]);
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for (j, xj) in x.iter_mut().enumerate() {
            let t = (rest % per_axis) as f64 / (per_axis - 1) as f64;
            rest /= per_axis;
            *xj = bounds.lower[j] + t * bounds.width(j);
        }
        let v = f(&x);
        if v < lo {
            lo = v;
            arg = x.clone();
        }
        hi = hi.max(v);
    }
    (lo, hi, arg)
}

impl Problem {
    /// Looks a problem up by name. `dim` defaults to the problem's native
    /// dimension; `noise` overrides its default noise level (a fraction of
    /// the range for the standard suite and `quadratic`, a multiplier on the
    /// native standard deviation for `sun` and `paper1d`).
    pub fn by_name(name: &str, dim: Option<usize>, noise: Option<f64>) -> Result<Self> {
        if noise.is_some_and(|n| !(n >= 0.0) || !n.is_finite()) {
            return Err(PgloError::config("noise must be a finite nonnegative number"));
        }
        match name {
            "sun" => {
                fixed_dim(name, dim, 2)?;
                Ok(Self {
                    name: name.into(),
                    kind: Kind::Sun,
                    bounds: Bounds::cube(2, 0.0, 100.0),
                    maximize: true,
                    f_star: -20.0,
                    optima: vec![vec![90.0, 90.0]],
                    range: 20.0,
                    noise: NoiseField::Sun { scale: noise.unwrap_or(1.0) },
                })
            }
            "paper1d" => {
                fixed_dim(name, dim, 1)?;
                let bounds = Bounds::unit(1);
                let (lo, hi, arg) = grid_range(|x| paper1d(x[0]), &Bounds::unit(1));
                let (x_star, f_star) = refine_1d(paper1d, arg[0], 1.0 / 200.0);
                Ok(Self {
                    name: name.into(),
                    kind: Kind::Paper1d,
                    bounds,
                    maximize: false,
                    f_star,
                    optima: vec![vec![x_star]],
                    range: hi - lo.min(f_star),
                    noise: NoiseField::Constant(2.0 * noise.unwrap_or(1.0)),
                })
            }
            "quadratic" => {
                let d = dim.unwrap_or(2);
                let bounds = Bounds::unit(d);
                let range = quadratic_range(d);
                Ok(Self {
                    name: name.into(),
                    kind: Kind::Quadratic,
                    bounds,
                    maximize: false,
                    f_star: 0.0,
                    optima: vec![vec![0.3; d]],
                    range,
                    noise: NoiseField::Constant(noise.unwrap_or(0.0) * range),
                })
            }
            _ => standard_suite(name, dim.unwrap_or(2), noise.unwrap_or(0.01)),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Minimized objective at `x` (problem units), without noise.
    pub fn true_f(&self, x: &[f64]) -> f64 {
        match self.kind {
            Kind::Sun => -(sun_term(x[0]) + sun_term(x[1])),
            Kind::Griewank => griewank(x),
            Kind::Ackley => ackley(x),
            Kind::Levy => levy(x),
            Kind::Schwefel => schwefel(x),
            Kind::Paper1d => paper1d(x[0]),
            Kind::Quadratic => x.iter().map(|v| (v - 0.3).powi(2)).sum(),
        }
    }

    /// Converts a minimized-scale value into the user-facing one.
    pub fn user_value(&self, minimized: f64) -> f64 {
        if self.maximize {
            -minimized
        } else {
            minimized
        }
    }

    pub fn noise_sd(&self, x: &[f64]) -> f64 {
        match self.noise {
            NoiseField::Sun { scale } => scale * 3f64.sqrt() * (1.0 + x[0] / 100.0) * (1.0 + x[1] / 100.0),
            NoiseField::Constant(sd) => sd,
        }
    }

    /// One noisy observation of the minimized objective.
    pub fn evaluate_noisy<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.true_f(x) + self.noise_sd(x) * z
    }

    /// `|f* - f(x)| / |f*|`, or `|f* - f(x)| / range` when `f* = 0`.
    pub fn relative_error(&self, x: &[f64]) -> f64 {
        let gap = (self.f_star - self.true_f(x)).abs();
        if self.f_star.abs() > 1e-12 {
            gap / self.f_star.abs()
        } else {
            gap / self.range
        }
    }

    pub fn is_success(&self, x: &[f64], tolerance: f64) -> bool {
        self.relative_error(x) < tolerance
    }
}

fn fixed_dim(name: &str, dim: Option<usize>, native: usize) -> Result<()> {
    match dim {
        Some(d) if d != native => Err(PgloError::config(format!("problem '{name}' is only defined for dim = {native}"))),
        _ => Ok(()),
    }
}

fn quadratic_range(d: usize) -> f64 {
    0.49 * d as f64
}

fn refine_1d<F: Fn(f64) -> f64>(f: F, x0: f64, h: f64) -> (f64, f64) {
    let (mut a, mut b) = ((x0 - h).max(0.0), (x0 + h).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Griewank, Ackley, Levy or Schwefel on its standard box, with constant
/// noise sd equal to `noise_fraction` of the range over the box.
pub fn standard_suite(name: &str, d: usize, noise_fraction: f64) -> Result<Problem> {
    if d == 0 {
        return Err(PgloError::config("dim must be at least 1"));
    }
    let (kind, half, opt): (Kind, f64, f64) = match name {
        "griewank" => (Kind::Griewank, 600.0, 0.0),
        "ackley" => (Kind::Ackley, 32.768, 0.0),
        "levy" => (Kind::Levy, 10.0, 1.0),
        "schwefel" => (Kind::Schwefel, 500.0, 420.968_746),
        _ => {
            return Err(PgloError::config(format!(
                "unknown problem '{name}' (expected one of {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    let bounds = Bounds::cube(d, -half, half);
    let f: fn(&[f64]) -> f64 = match kind {
        Kind::Griewank => griewank,
        Kind::Ackley => ackley,
        Kind::Levy => levy,
        _ => schwefel,
    };
    let (lo, hi, _) = grid_range(f, &bounds);
    let range = hi - lo.min(0.0);
    Ok(Problem {
        name: name.into(),
        kind,
        bounds,
        maximize: false,
        f_star: 0.0,
        optima: vec![vec![opt; d]],
        range,
        noise: NoiseField::Constant(noise_fraction * range),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sun_values() {
        assert_eq!(sun_function(90.0, 90.0).unwrap(), 20.0);
        assert!((sun_function(70.0, 90.0).unwrap() - 18.95).abs() <= 0.005);
        assert_eq!(sun_function(0.0, 0.0).unwrap(), 0.0);
        assert!(sun_function(-1.0, 5.0).is_err());
    }

    #[test]
    fn suite_optima() {
        for name in ["griewank", "ackley", "levy", "schwefel"] {
            let p = standard_suite(name, 2, 0.01).unwrap();
            assert!((p.true_f(&p.optima[0]) - p.f_star).abs() < 1e-3, "{name}");
        }
        assert!(standard_suite("rosenbrock", 2, 0.01).is_err());
    }
}
