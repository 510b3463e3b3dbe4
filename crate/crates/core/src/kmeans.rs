//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;

use crate::design::squared_distance;

const MAX_ITER: usize = 100;
const RESTARTS: usize = 4;

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn plus_plus_init<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, centers.last().unwrap()));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, f64) {
    let d = points[0].len();
    let k = centers.len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let l = nearest(p, &centers);
            if l != labels[i] {
                labels[i] = l;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for j in 0..d {
                sums[l][j] += p[j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        squared_distance(&points[a], &centers[labels[a]])
                            .total_cmp(&squared_distance(&points[b], &centers[labels[b]]))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                labels[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points.iter().map(|p| squared_distance(p, &centers[nearest(p, &centers)])).sum();
    (centers, inertia)
}

/// Returns `k` centroids minimizing within-cluster squared distance over a
/// few seeded restarts. Requires `1 <= k <= points.len()`.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(k >= 1 && k <= points.len(), "k-means needs 1 <= k <= n");
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    for _ in 0..RESTARTS {
        let init = plus_plus_init(points, k, rng);
        let (centers, inertia) = lloyd(points, init);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((centers, inertia));
        }
    }
    best.unwrap().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn separates_two_blobs() {
        let mut pts = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.005;
            pts.push(vec![0.0 + e, 0.02 - e]);
            pts.push(vec![1.0 - e, 0.98 + e / 2.0]);
        }
        let c = kmeans(&pts, 2, &mut stream(1, "kmeans", &[]));
        let lo = nearest(&[0.0, 0.0], &c);
        let hi = nearest(&[1.0, 1.0], &c);
        assert_ne!(lo, hi);
        assert!(c[lo][0] < 0.05 && c[hi][0] > 0.95);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let c = vec![vec![0.0], vec![1.0]];
        assert_eq!(nearest(&[0.5], &c), 0);
    }
}
