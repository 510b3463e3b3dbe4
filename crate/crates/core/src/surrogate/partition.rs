use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::archive::SAME_POINT_TOL;
use crate::design::{squared_distance, Bounds};
use crate::error::{PgloError, Result};
use crate::kmeans::{kmeans, nearest};

const BOX_GRID_POINTS: usize = 20_000;

/// Voronoi partition of the unit cube into `K` local regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub centroids: Vec<Vec<f64>>,
    /// Approximate bounding box of each region, from a regular grid.
    pub region_boxes: Vec<Bounds>,
}

impl RegionPartition {
    pub fn from_centroids(centroids: Vec<Vec<f64>>) -> Self {
        let region_boxes = region_boxes(&centroids);
        Self { centroids, region_boxes }
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    /// Nearest-centroid region of `x`; ties go to the lowest index.
    pub fn region_of(&self, x: &[f64]) -> usize {
        nearest(x, &self.centroids)
    }

    pub fn region_box(&self, k: usize) -> &Bounds {
        &self.region_boxes[k]
    }
}

fn region_boxes(centroids: &[Vec<f64>]) -> Vec<Bounds> {
    let d = centroids[0].len();
    let per_axis = ((BOX_GRID_POINTS as f64).powf(1.0 / d as f64).floor() as usize).max(2);
    let mut lo = vec![vec![f64::INFINITY; d]; centroids.len()];
    let mut hi = vec![vec![f64::NEG_INFINITY; d]; centroids.len()];
    let total = per_axis.pow(d as u32);
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for xj in x.iter_mut() {
            *xj = (rest % per_axis) as f64 / (per_axis - 1) as f64;
            rest /= per_axis;
        }
        let k = nearest(&x, centroids);
        for j in 0..d {
            lo[k][j] = lo[k][j].min(x[j]);
            hi[k][j] = hi[k][j].max(x[j]);
        }
    }
    let cell = 1.0 / (per_axis - 1) as f64;
    lo.into_iter()
        .zip(hi)
        .zip(centroids)
        .map(|((l, h), c)| {
            if l[0].is_finite() {
                let lower = l.iter().map(|v| (v - cell / 2.0).max(0.0)).collect();
                let upper = h.iter().map(|v| (v + cell / 2.0).min(1.0)).collect();
                Bounds { lower, upper }
            } else {
                // Region too thin for the grid: a small box around its centroid.
                Bounds {
                    lower: c.iter().map(|v| (v - cell).max(0.0)).collect(),
                    upper: c.iter().map(|v| (v + cell).min(1.0)).collect(),
                }
            }
        })
        .collect()
}

/// Splits the domain into `k` regions by k-means over `points`.
pub fn partition_space<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<RegionPartition> {
    if k == 0 {
        return Err(PgloError::config("K must be at least 1"));
    }
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !distinct.iter().any(|q| squared_distance(p, q) <= SAME_POINT_TOL * SAME_POINT_TOL) {
            distinct.push(p.clone());
        }
    }
    if k > distinct.len() {
        return Err(PgloError::config(format!(
            "K ({k}) exceeds the number of distinct initial points ({})",
            distinct.len()
        )));
    }
    let centroids = if k == 1 {
        vec![centroid(&distinct)]
    } else {
        kmeans(&distinct, k, rng)
    };
    Ok(RegionPartition::from_centroids(centroids))
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn single_region_covers_everything() {
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.9], vec![0.4, 0.4]];
        let p = partition_space(&pts, 1, &mut stream(0, "kmeans", &[])).unwrap();
        for x in [[0.0, 0.0], [1.0, 1.0], [0.5, 0.3]] {
            assert_eq!(p.region_of(&x), 0);
        }
        assert_eq!(p.region_box(0), &Bounds::unit(2));
    }

    #[test]
    fn two_clusters_assign_nearby_points() {
        let mut pts = Vec::new();
        for i in 0..5 {
            let e = 0.01 * i as f64;
            pts.push(vec![e, 0.02 - e / 2.0]);
            pts.push(vec![1.0 - e, 1.0 - e / 3.0]);
        }
        let p = partition_space(&pts, 2, &mut stream(11, "kmeans", &[])).unwrap();
        let r0 = p.region_of(&[0.0, 0.0]);
        assert_eq!(p.region_of(&[0.1, 0.1]), r0);
        assert_ne!(p.region_of(&[1.0, 1.0]), r0);
        let c = &p.centroids[r0];
        assert!(c[0] < 0.05 && c[1] < 0.05);
    }

    #[test]
    fn equidistant_point_goes_to_lower_index() {
        let p = RegionPartition::from_centroids(vec![vec![0.25, 0.5], vec![0.75, 0.5]]);
        assert_eq!(p.region_of(&[0.5, 0.9]), 0);
    }

    #[test]
    fn too_many_regions_is_config_error() {
        let pts = vec![vec![0.1], vec![0.1], vec![0.5]];
        let err = partition_space(&pts, 3, &mut stream(0, "kmeans", &[])).unwrap_err();
        assert!(matches!(err, PgloError::Config(_)));
    }

    #[test]
    fn region_boxes_contain_their_centroids() {
        let p = RegionPartition::from_centroids(vec![vec![0.2, 0.2], vec![0.8, 0.3], vec![0.5, 0.9]]);
        for k in 0..3 {
            assert!(p.region_box(k).contains(&p.centroids[k]));
        }
        assert!(p.region_box(0).upper[0] < 0.6);
    }
}
