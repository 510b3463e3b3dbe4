//! Candidate-set plus coordinate-refinement maximizer for cheap acquisitions.

use rand::Rng;

use crate::design::{latin_hypercube, Bounds};
use crate::error::{PgloError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeOptions {
    /// Latin hypercube candidates per input dimension.
    pub candidates_per_dim: usize,
    /// Number of best candidates refined locally.
    pub refine_starts: usize,
    /// Refinement stops once the step falls below this fraction of the width.
    pub min_step: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { candidates_per_dim: 256, refine_starts: 5, min_step: 1e-4 }
    }
}

/// Maximizes `f` over the admissible part of `bounds`.
///
/// When every admissible candidate scores zero the candidate with the largest
/// `variance` is returned instead (with value 0). `extra` points are scored
/// alongside the Latin hypercube candidates.
pub fn maximize_acquisition<F, V, A, R>(
    f: F,
    variance: V,
    bounds: &Bounds,
    admissible: A,
    extra: &[Vec<f64>],
    options: &MaximizeOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
    V: Fn(&[f64]) -> f64,
    A: Fn(&[f64]) -> bool,
    R: Rng + ?Sized,
{
    let d = bounds.dim();
    let n = options.candidates_per_dim.max(1) * d;
    let mut scored: Vec<(Vec<f64>, f64)> = latin_hypercube(n, bounds, rng)
        .into_iter()
        .chain(extra.iter().cloned())
        .filter(|x| admissible(x))
        .map(|x| {
            let v = f(&x);
            (x, if v.is_finite() { v } else { 0.0 })
        })
        .collect();
    if scored.is_empty() {
        return Err(PgloError::Acquisition("no admissible candidate in the search domain".into()));
    }
    if scored.iter().all(|(_, v)| *v <= 0.0) {
        let best = scored
            .iter()
            .map(|(x, _)| (x, variance(x)))
            .fold(None::<(&Vec<f64>, f64)>, |acc, (x, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((x, v)),
            })
            .map(|(x, _)| x.clone())
            .expect("nonempty");
        return Ok((best, 0.0));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best = scored[0].clone();
    for (start, value) in scored.into_iter().take(options.refine_starts.max(1)) {
        if value <= 0.0 {
            break;
        }
        let refined = refine(&f, bounds, &admissible, start, value, options.min_step);
        if refined.1 > best.1 {
            best = refined;
        }
    }
    Ok(best)
}

fn refine<F, A>(f: &F, bounds: &Bounds, admissible: &A, mut x: Vec<f64>, mut value: f64, min_step: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    A: Fn(&[f64]) -> bool,
{
    let d = bounds.dim();
    let mut step = 0.05;
    while step >= min_step {
        let mut improved = false;
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[j] = (y[j] + sign * step * bounds.width(j)).clamp(bounds.lower[j], bounds.upper[j]);
                if y[j] == x[j] || !admissible(&y) {
                    continue;
                }
                let v = f(&y);
                if v > value {
                    x = y;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, value)
}
