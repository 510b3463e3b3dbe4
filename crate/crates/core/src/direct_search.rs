//! Generalized pattern search on sample means.
//!
//! The poll set is the `2d` coordinate directions scaled by the current mesh
//! size. A poll succeeds only if some candidate mean is strictly below the
//! incumbent mean; otherwise the mesh is halved.

use serde::{Deserialize, Serialize};

use crate::design::Bounds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshState {
    pub incumbent: Vec<f64>,
    pub incumbent_mean: f64,
    pub mesh_size: f64,
    pub step_count: usize,
}

impl MeshState {
    pub fn new(incumbent: Vec<f64>, incumbent_mean: f64, mesh_size: f64) -> Self {
        assert!(mesh_size > 0.0, "mesh size must be positive");
        Self { incumbent, incumbent_mean, mesh_size, step_count: 0 }
    }
}

/// A local search that proposes candidates, digests their sample means and
/// decides when a group of searches should stop.
pub trait DirectSearch {
    type State;

    fn next_candidates(&self, state: &Self::State) -> Vec<Vec<f64>>;

    fn update(&self, state: &Self::State, results: &[(Vec<f64>, f64)]) -> Self::State;

    fn is_terminated(&self, states: &[Self::State]) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSearch {
    pub domain: Bounds,
    pub min_mesh: f64,
}

impl DirectSearch for PatternSearch {
    type State = MeshState;

    fn next_candidates(&self, state: &MeshState) -> Vec<Vec<f64>> {
        poll_candidates(state, &self.domain)
    }

    fn update(&self, state: &MeshState, results: &[(Vec<f64>, f64)]) -> MeshState {
        update_mesh(state, results)
    }

    fn is_terminated(&self, states: &[MeshState]) -> bool {
        is_terminated(states, self.min_mesh)
    }
}

/// `incumbent ± M e_i`, clipped to the domain, without the incumbent itself
/// or repeated points.
pub fn poll_candidates(state: &MeshState, domain: &Bounds) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(2 * domain.dim());
    for j in 0..domain.dim() {
        for sign in [1.0, -1.0] {
            let mut x = state.incumbent.clone();
            x[j] = (x[j] + sign * state.mesh_size).clamp(domain.lower[j], domain.upper[j]);
            if x != state.incumbent && !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

/// Moves to the best candidate on strict improvement, halves the mesh otherwise.
pub fn update_mesh(state: &MeshState, results: &[(Vec<f64>, f64)]) -> MeshState {
    let mut next = state.clone();
    next.step_count += 1;
    let best = results.iter().filter(|(_, m)| m.is_finite()).min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((x, m)) if *m < state.incumbent_mean => {
            next.incumbent = x.clone();
            next.incumbent_mean = *m;
        }
        _ => next.mesh_size *= 0.5,
    }
    next
}

/// True once the smallest mesh across all threads is at most `min_mesh`.
pub fn is_terminated(states: &[MeshState], min_mesh: f64) -> bool {
    states.iter().map(|s| s.mesh_size).fold(f64::INFINITY, f64::min) <= min_mesh
}

/// Runs noiseless pattern search on `f` until the mesh drops below `tol`.
/// Returns the final state and the mesh size after every step.
pub fn converge_quadratic_sanity<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    domain: &Bounds,
    initial_mesh: f64,
    tol: f64,
) -> (MeshState, Vec<f64>) {
    let search = PatternSearch { domain: domain.clone(), min_mesh: tol };
    let mut state = MeshState::new(start.to_vec(), f(start), initial_mesh);
    let mut meshes = vec![state.mesh_size];
    while state.mesh_size >= tol {
        let results: Vec<(Vec<f64>, f64)> =
            search.next_candidates(&state).into_iter().map(|x| { let v = f(&x); (x, v) }).collect();
        state = search.update(&state, &results);
        meshes.push(state.mesh_size);
    }
    (state, meshes)
}
