//! Greedy batch construction with kriging-believer updates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::maximize::{maximize_acquisition, MaximizeOptions};
use super::{expected_improvement, mei, PenaltyState};
use crate::design::{squared_distance, Bounds};
use crate::error::{PgloError, Result};
use crate::rng::stream;
use crate::surrogate::{AglgpModel, GlobalPosterior, LocalPosterior};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub maximize: MaximizeOptions,
    pub seed: u64,
    /// Believer pseudo-noise as a fraction of the prior variance.
    pub pseudo_noise: f64,
    /// Artificial-point rounds allowed per batch member before the best
    /// non-duplicate alternative is taken.
    pub max_duplicate_rounds: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { maximize: MaximizeOptions::default(), seed: 0, pseudo_noise: 1e-8, max_duplicate_rounds: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalCandidateBatch {
    pub points: Vec<Vec<f64>>,
    /// `q_k` for every region.
    pub region_counts: Vec<usize>,
    /// Overall prediction believed at each point (original scale).
    pub believer_values: Vec<f64>,
    /// Artificial neighbours added at each location to break duplicates.
    pub artificial_counts: Vec<(Vec<f64>, usize)>,
}

pub(super) fn global_ei_with(model: &AglgpModel, global: &GlobalPosterior, x: &[f64], y_gmin: f64) -> f64 {
    let st = model.standardization();
    let (m, v) = global.predict(x);
    expected_improvement(st.mean + st.sd * m, st.sd * v.sqrt(), y_gmin)
}

pub(super) fn inducing_min(model: &AglgpModel, global: &GlobalPosterior) -> f64 {
    let st = model.standardization();
    global.inducing_means().into_iter().map(|m| st.mean + st.sd * m).fold(f64::INFINITY, f64::min)
}

fn gei_step<A: Fn(&[f64]) -> bool>(
    model: &AglgpModel,
    global: &GlobalPosterior,
    y_gmin: f64,
    penalty: &PenaltyState,
    admissible: A,
    options: &BatchOptions,
    coords: &[u64],
) -> Result<(Vec<f64>, f64)> {
    maximize_acquisition(
        |x| global_ei_with(model, global, x, y_gmin) * penalty.factor(x),
        |x| global.predict(x).1,
        &Bounds::unit(model.dim()),
        admissible,
        model.inducing(),
        &options.maximize,
        &mut stream(options.seed, "gei", coords),
    )
}

/// Single-point gEI maximization, identical to the first step of
/// [`propose_global_batch`].
pub fn maximize_gei(
    model: &AglgpModel,
    y_gmin: f64,
    penalty: &PenaltyState,
    options: &BatchOptions,
) -> Result<(Vec<f64>, f64)> {
    gei_step(model, model.global(), y_gmin, penalty, |_| true, options, &[0, 0])
}

/// Builds a `q`-point batch by sequential gEI maximization.
pub fn propose_global_batch(
    model: &AglgpModel,
    penalty: &PenaltyState,
    q: usize,
    options: &BatchOptions,
) -> Result<GlobalCandidateBatch> {
    if q == 0 {
        return Err(PgloError::config("batch size q must be at least 1"));
    }
    let mut global = model.global().clone();
    let mut pen = penalty.clone();
    let a2 = pen.a * pen.a;
    let mut batch = GlobalCandidateBatch {
        points: Vec::with_capacity(q),
        region_counts: vec![0; model.partition().k()],
        believer_values: Vec::with_capacity(q),
        artificial_counts: Vec::new(),
    };
    for i in 0..q {
        let y_gmin = inducing_min(model, &global);
        let mut round = 0usize;
        let x = loop {
            let coords = [i as u64, round as u64];
            let (x, _) = gei_step(model, &global, y_gmin, &pen, |_| true, options, &coords)?;
            let Some(j) = batch.points.iter().position(|p| squared_distance(p, &x) <= a2) else {
                break x;
            };
            let taken = &batch.points;
            let (alt, best_other) = gei_step(
                model,
                &global,
                y_gmin,
                &pen,
                |y| taken.iter().all(|p| squared_distance(p, y) > a2),
                options,
                &[i as u64, round as u64, 1],
            )?;
            if round >= options.max_duplicate_rounds || best_other <= 0.0 {
                break alt;
            }
            let e = global_ei_with(model, &global, &x, y_gmin);
            let ratio = e / best_other - 1.0;
            let needed = if ratio > 0.0 { pen.v * (5.0 + ratio.ln()) - pen.neighbor_count(&x) } else { 1.0 };
            let extra = needed.ceil().max(1.0);
            let site = batch.points[j].clone();
            pen.add_artificial(&site, extra);
            match batch.artificial_counts.iter_mut().find(|(s, _)| *s == site) {
                Some((_, c)) => *c += extra as usize,
                None => batch.artificial_counts.push((site, extra as usize)),
            }
            round += 1;
        };
        let region = model.region_of(&x);
        let (gm, _) = global.predict(&x);
        let (lm, _, _) = model.local(region).predict(&x);
        let st = model.standardization();
        global.condition(&x, gm + lm, options.pseudo_noise * global.hyper.sigma2);
        batch.believer_values.push(st.mean + st.sd * (gm + lm));
        batch.region_counts[region] += 1;
        batch.points.push(x);
    }
    Ok(batch)
}

fn local_mei(model: &AglgpModel, local: &LocalPosterior, k: usize, x: &[f64], y_min: f64) -> f64 {
    let (gm, gv) = model.global().predict(x);
    let (lm, lv, zv) = local.predict(x);
    mei(&model.compose(gm, gv, lm, lv, zv, k), y_min)
}

/// Chooses `q_k` pattern-search starting points inside region `k` by
/// sequential mEI maximization. Picks are kept more than `a` apart.
pub fn propose_local_starts(
    model: &AglgpModel,
    k: usize,
    q_k: usize,
    y_min_k: f64,
    a: f64,
    options: &BatchOptions,
) -> Result<Vec<Vec<f64>>> {
    let region_points: Vec<Vec<f64>> = model.members(k).iter().map(|&i| model.data().x[i].clone()).collect();
    if region_points.is_empty() {
        return Err(PgloError::Acquisition(format!("region {k} has no design points")));
    }
    let a2 = a * a;
    let bounds = model.partition().region_box(k).clone();
    let mut local = model.local(k).clone();
    let mut picks: Vec<Vec<f64>> = Vec::with_capacity(q_k);
    for i in 0..q_k {
        let admissible =
            |x: &[f64]| model.region_of(x) == k && picks.iter().all(|p| squared_distance(p, x) > a2);
        let found = maximize_acquisition(
            |x| local_mei(model, &local, k, x, y_min_k),
            |x| local.predict(x).2,
            &bounds,
            admissible,
            &region_points,
            &options.maximize,
            &mut stream(options.seed, "mei", &[k as u64, i as u64]),
        );
        let x = match found {
            Ok((x, _)) => x,
            Err(_) => {
                return Err(PgloError::Acquisition(format!(
                    "region {k} admits only {} well-separated starting points",
                    picks.len()
                )))
            }
        };
        let r = local.predict(&x).0;
        local.condition(&x, r, options.pseudo_noise * local.hyper.tau2);
        picks.push(x);
    }
    Ok(picks)
}

/// Monte-Carlo estimate of the joint batch improvement
/// `E[max(y_gmin - min_i y_g(x_i), 0)]` and its standard error.
pub fn qgei_monte_carlo<R: Rng + ?Sized>(
    model: &AglgpModel,
    points: &[Vec<f64>],
    y_gmin: f64,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let st = model.standardization();
    let global = model.global();
    let q = points.len();
    let mean = DVector::from_iterator(q, points.iter().map(|x| st.mean + st.sd * global.predict(x).0));
    let cov = DMatrix::from_fn(q, q, |i, j| st.sd * st.sd * global.covariance(&points[i], &points[j]));
    let scale = cov.diagonal().max().max(1e-300);
    let chol = (0..8)
        .find_map(|e| (cov.clone() + DMatrix::identity(q, q) * scale * 1e-12 * 10f64.powi(e)).cholesky())
        .expect("covariance factorization");
    let l = chol.l();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..draws {
        let z = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let y = &mean + &l * z;
        let imp = (y_gmin - y.min()).max(0.0);
        sum += imp;
        sum2 += imp * imp;
    }
    let n = draws as f64;
    let est = sum / n;
    let var = (sum2 / n - est * est).max(0.0);
    (est, (var / n).sqrt())
}

/// Sequential mEI over the whole domain. Believer updates persist across
/// calls, so every new start is conditioned on all earlier ones.
#[derive(Debug, Clone)]
pub struct DomainStartSequence<'a> {
    model: &'a AglgpModel,
    locals: Vec<LocalPosterior>,
    picks: Vec<Vec<f64>>,
    y_min: f64,
    a: f64,
    options: BatchOptions,
}

impl<'a> DomainStartSequence<'a> {
    pub fn new(model: &'a AglgpModel, y_min: f64, a: f64, options: BatchOptions) -> Self {
        let locals = (0..model.partition().k()).map(|k| model.local(k).clone()).collect();
        Self { model, locals, picks: Vec::new(), y_min, a, options }
    }

    pub fn picks(&self) -> &[Vec<f64>] {
        &self.picks
    }

    pub fn next_start(&mut self) -> Result<Vec<f64>> {
        let model = self.model;
        let a2 = self.a * self.a;
        let picks = &self.picks;
        let locals = &self.locals;
        let (x, _) = maximize_acquisition(
            |x| {
                let k = model.region_of(x);
                local_mei(model, &locals[k], k, x, self.y_min)
            },
            |x| locals[model.region_of(x)].predict(x).2,
            &Bounds::unit(model.dim()),
            |x| picks.iter().all(|p| squared_distance(p, x) > a2),
            &model.data().x,
            &self.options.maximize,
            &mut stream(self.options.seed, "mei-domain", &[picks.len() as u64]),
        )?;
        let k = model.region_of(&x);
        let local = &mut self.locals[k];
        let r = local.predict(&x).0;
        let noise = self.options.pseudo_noise * local.hyper.tau2;
        local.condition(&x, r, noise);
        self.picks.push(x.clone());
        Ok(x)
    }
}
