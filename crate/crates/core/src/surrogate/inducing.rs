use rand::Rng;

use crate::design::squared_distance;
use crate::error::{PgloError, Result};
use crate::kmeans::kmeans;

/// Picks `m` distinct design locations as inducing points: k-means centres of
/// the design, each snapped to the nearest not-yet-used design point.
pub fn select_inducing_points<R: Rng + ?Sized>(locations: &[Vec<f64>], m: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let n = locations.len();
    if m > n {
        return Err(PgloError::config(format!("m ({m}) exceeds the number of design points ({n})")));
    }
    if m == 0 {
        return Err(PgloError::config("m must be at least 1"));
    }
    if m == n {
        return Ok(locations.to_vec());
    }
    let centers = kmeans(locations, m, rng);
    let mut used = vec![false; n];
    let mut chosen = Vec::with_capacity(m);
    for c in &centers {
        let pick = (0..n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| squared_distance(&locations[a], c).total_cmp(&squared_distance(&locations[b], c)))
            .expect("m < n leaves unused points");
        used[pick] = true;
        chosen.push(locations[pick].clone());
    }
    Ok(chosen)
}
