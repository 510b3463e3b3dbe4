//! Evaluated design points and their replication statistics.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::squared_distance;

/// Two locations closer than this (in unit-cube coordinates) are the same
/// design point; their replications are merged.
pub const SAME_POINT_TOL: f64 = 1e-9;

/// One evaluated location with running replication statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    /// Location in unit-cube coordinates.
    pub location: Vec<f64>,
    pub replications: usize,
    mean: f64,
    m2: f64,
    /// Analytic noise variance, when the problem exposes one.
    pub known_variance: Option<f64>,
    pub region_id: usize,
}

impl DesignPoint {
    pub fn new(location: Vec<f64>) -> Self {
        Self { location, replications: 0, mean: 0.0, m2: 0.0, known_variance: None, region_id: 0 }
    }

    pub fn observe(&mut self, y: f64) {
        self.replications += 1;
        let delta = y - self.mean;
        self.mean += delta / self.replications as f64;
        self.m2 += delta * (y - self.mean);
    }

    pub fn sample_mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two replications.
    pub fn sample_variance(&self) -> f64 {
        if self.replications < 2 {
            0.0
        } else {
            (self.m2 / (self.replications - 1) as f64).max(0.0)
        }
    }

    /// Builds a point from summary statistics (tests, snapshots).
    pub fn from_stats(location: Vec<f64>, replications: usize, mean: f64, variance: f64) -> Self {
        let m2 = if replications > 1 { variance * (replications - 1) as f64 } else { 0.0 };
        Self { location, replications, mean, m2, known_variance: None, region_id: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignArchive {
    points: Vec<DesignPoint>,
    total_evaluations: usize,
}

impl DesignArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<DesignPoint>) -> Self {
        let total_evaluations = points.iter().map(|p| p.replications).sum();
        Self { points, total_evaluations }
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DesignPoint {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_evaluations(&self) -> usize {
        self.total_evaluations
    }

    pub fn find(&self, location: &[f64]) -> Option<usize> {
        let tol2 = SAME_POINT_TOL * SAME_POINT_TOL;
        self.points.iter().position(|p| squared_distance(&p.location, location) <= tol2)
    }

    /// Index of `location`, inserting a fresh (unevaluated) point when new.
    pub fn ensure(&mut self, location: &[f64]) -> usize {
        match self.find(location) {
            Some(i) => i,
            None => {
                self.points.push(DesignPoint::new(location.to_vec()));
                self.points.len() - 1
            }
        }
    }

    pub fn observe(&mut self, index: usize, y: f64) {
        self.points[index].observe(y);
        self.total_evaluations += 1;
    }

    pub fn set_known_variance(&mut self, index: usize, variance: f64) {
        self.points[index].known_variance = Some(variance);
    }

    pub fn set_region(&mut self, index: usize, region: usize) {
        self.points[index].region_id = region;
    }

    pub fn locations(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.location.clone()).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sample_mean()).collect()
    }

    /// Index of the smallest sample mean among evaluated points; ties go to
    /// the lowest index.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in self.points.iter().enumerate() {
            if p.replications == 0 {
                continue;
            }
            if best.is_none_or(|b| p.sample_mean() < self.points[b].sample_mean()) {
                best = Some(i);
            }
        }
        best
    }

    /// Like [`best_index`](Self::best_index) but only over points with at
    /// least `min_reps` replications, falling back to all points when none
    /// qualify.
    pub fn best_settled_index(&self, min_reps: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in self.points.iter().enumerate() {
            if p.replications == 0 || p.replications < min_reps {
                continue;
            }
            if best.is_none_or(|b| p.sample_mean() < self.points[b].sample_mean()) {
                best = Some(i);
            }
        }
        best.or_else(|| self.best_index())
    }

    /// Per-observation noise variance of every point: the known variance when
    /// set, else the sample variance for points with two or more
    /// replications, else the mean sample variance of those points (or
    /// `floor` when there are none). Values are floored at `floor`.
    pub fn noise_variances(&self, floor: f64) -> Vec<f64> {
        let (sum, count) = self
            .points
            .iter()
            .filter(|p| p.replications >= 2)
            .fold((0.0, 0usize), |(s, c), p| (s + p.sample_variance(), c + 1));
        let pooled = if count > 0 { sum / count as f64 } else { floor };
        self.points
            .iter()
            .map(|p| {
                let v = p.known_variance.unwrap_or(if p.replications >= 2 { p.sample_variance() } else { pooled });
                v.max(floor)
            })
            .collect()
    }

    /// Number of points within Euclidean distance `radius` of `x`.
    pub fn count_within(&self, x: &[f64], radius: f64) -> usize {
        let r2 = radius * radius;
        self.points.iter().filter(|p| squared_distance(&p.location, x) <= r2).count()
    }

    /// SHA-256 over locations and replication statistics.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.points {
            for v in &p.location {
                h.update(v.to_le_bytes());
            }
            h.update((p.replications as u64).to_le_bytes());
            h.update(p.mean.to_le_bytes());
            h.update(p.m2.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
