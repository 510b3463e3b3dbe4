//! Box domains and Latin hypercube designs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PgloError, Result};

/// Axis-aligned box `[lower_j, upper_j]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(PgloError::config("bounds must have matching, nonzero dimension"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(PgloError::config("every lower bound must be finite and below its upper bound"));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lower: vec![lo; dim], upper: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(j, &v)| v >= self.lower[j] && v <= self.upper[j])
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    /// Maps a point of this box onto the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, &v)| (v - self.lower[j]) / self.width(j)).collect()
    }

    /// Maps a unit-cube point back into this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(j, &v)| self.lower[j] + v * self.width(j)).collect()
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Latin hypercube sample of `n` points in the box; one point per stratum
/// along every axis, uniformly jittered inside its stratum.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, bounds: &Bounds, rng: &mut R) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut points = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, p) in points.iter_mut().enumerate() {
            let u = (strata[i] as f64 + rng.random::<f64>()) / n as f64;
            p[j] = bounds.lower[j] + u * bounds.width(j);
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn lhs_has_one_point_per_stratum() {
        let b = Bounds::new(vec![0.0, -5.0], vec![1.0, 5.0]).unwrap();
        let pts = latin_hypercube(12, &b, &mut stream(3, "design", &[]));
        assert_eq!(pts.len(), 12);
        for j in 0..2 {
            let mut seen = vec![false; 12];
            for p in &pts {
                assert!(b.contains(p));
                let s = (((p[j] - b.lower[j]) / b.width(j)) * 12.0).floor() as usize;
                seen[s.min(11)] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn unit_mapping_round_trips() {
        let b = Bounds::new(vec![-600.0, 0.0], vec![600.0, 100.0]).unwrap();
        let x = vec![150.0, 90.0];
        let u = b.to_unit(&x);
        assert_eq!(u, vec![0.625, 0.9]);
        let back = b.from_unit(&u);
        assert!((back[0] - 150.0).abs() < 1e-12 && (back[1] - 90.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(Bounds::new(vec![1.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }
}
