#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pglo::design::{latin_hypercube, Bounds};
use pglo::rng::stream;
use pglo::surrogate::{
    partition_space, select_inducing_points, FitOptions, GlobalHyper, LocalHyper, RegionPartition, DEFAULT_NOISE_FLOOR,
};
use pglo::{AglgpModel, DesignArchive, DesignPoint};
use rand::Rng;

/// Random archive and partition: `d ≤ 2`, `n ≤ 12`, `K ≤ 2`. Points with
/// `noiseless` set get zero sample variance.
fn random_data(seed: u64, noiseless: f64) -> (DesignArchive, RegionPartition, usize) {
    let mut rng = stream(seed, "instance", &[]);
    let d = rng.random_range(1..=2);
    let n = rng.random_range(6..=12);
    let k = rng.random_range(1..=2);
    let locs = latin_hypercube(n, &Bounds::unit(d), &mut rng);
    let phase: f64 = rng.random_range(0.0..3.0);
    let points = locs
        .iter()
        .map(|x| {
            let f = (4.0 * x[0] + phase).sin() + x.iter().sum::<f64>();
            let var: f64 = if rng.random_bool(noiseless) { 0.0 } else { rng.random_range(0.001..0.2) };
            let noise = var.sqrt() * rng.random_range(-1.0..1.0);
            DesignPoint::from_stats(x.clone(), rng.random_range(1..=6), f + noise, var)
        })
        .collect();
    let partition = partition_space(&locs, k, &mut stream(seed, "kmeans", &[])).unwrap();
    (DesignArchive::from_points(points), partition, k)
}

/// A small random model fitted by maximum likelihood (`m ≤ 4`).
pub fn small_instance(seed: u64) -> AglgpModel {
    let (archive, partition, k) = random_data(seed, 0.3);
    let m = stream(seed, "m", &[]).random_range(k..=4);
    let opts = FitOptions { seed, starts: 3, ..FitOptions::default() };
    AglgpModel::fit(&archive, &partition, m, &opts).unwrap()
}

/// A small random model with hyperparameters drawn from moderate ranges
/// instead of estimated, so that the explicit inverses of the dense oracle
/// stay well conditioned.
pub fn drawn_instance(seed: u64) -> AglgpModel {
    let (archive, partition, k) = random_data(seed, 0.0);
    let mut rng = stream(seed, "hyper-draw", &[]);
    let d = partition.dim();
    let m = rng.random_range(k..=4);
    let inducing = select_inducing_points(&archive.locations(), m, &mut rng).unwrap();
    let global = GlobalHyper {
        mu: rng.random_range(-0.5..0.5),
        sigma2: rng.random_range(0.3..2.0),
        theta: (0..d).map(|_| rng.random_range(2.0..30.0)).collect(),
    };
    let locals = (0..k)
        .map(|_| LocalHyper {
            tau2: rng.random_range(0.05..0.5),
            alpha: (0..d).map(|_| rng.random_range(5.0..60.0)).collect(),
        })
        .collect();
    AglgpModel::with_hyperparameters(&archive, &partition, inducing, global, locals, None, DEFAULT_NOISE_FLOOR).unwrap()
}

fn corr(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    (-a.iter().zip(b).zip(theta).map(|((x, y), t)| t * (x - y) * (x - y)).sum::<f64>()).exp()
}

fn cov(rows: &[Vec<f64>], cols: &[Vec<f64>], var: f64, theta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| var * corr(&rows[i], &cols[j], theta))
}

fn inv(m: DMatrix<f64>) -> DMatrix<f64> {
    m.try_inverse().expect("oracle matrix is invertible")
}

/// Prediction components recomputed with explicit dense inverses:
/// `(mean_global, var_global, mean_local, var_local, var_z)` on the original
/// response scale. Hyperparameters, inducing points, data and the diagonal
/// jitters are read back from `model`.
pub fn dense_prediction(model: &AglgpModel, x: &[f64]) -> [f64; 5] {
    let data = model.data();
    let st = model.standardization();
    let g = model.global();
    let (mu, s2, theta) = (g.hyper.mu, g.hyper.sigma2, &g.hyper.theta);
    let z = &g.inducing;
    let n = data.x.len();

    let mut gm = cov(z, z, s2, theta);
    for i in 0..z.len() {
        gm[(i, i)] += g.jitter;
    }
    let gm_inv = inv(gm.clone());
    let gmn = cov(z, &data.x, s2, theta);
    let mut d_inv = DMatrix::zeros(n, n);
    for i in 0..n {
        let col = gmn.column(i).into_owned();
        let lambda = (s2 - (col.transpose() * &gm_inv * &col)[(0, 0)]).max(0.0);
        d_inv[(i, i)] = 1.0 / (lambda + data.noise[i]);
    }
    let qm = &gm + &gmn * &d_inv * gmn.transpose();
    let qm_inv = inv(qm);
    let y = DVector::from_iterator(n, data.y.iter().map(|v| v - mu));
    let weights = &qm_inv * &gmn * &d_inv * y;
    let global = |p: &[f64]| {
        let gv = DVector::from_iterator(z.len(), z.iter().map(|zi| s2 * corr(p, zi, theta)));
        let mean = mu + gv.dot(&weights);
        let var = s2 - (gv.transpose() * &gm_inv * &gv)[(0, 0)] + (gv.transpose() * &qm_inv * &gv)[(0, 0)];
        (mean, var.max(0.0))
    };
    let (gmean, gvar) = global(x);

    let k = model.region_of(x);
    let local = model.local(k);
    let members = model.members(k);
    let (tau2, alpha) = (local.hyper.tau2, &local.hyper.alpha);
    let (lmean, lvar, zvar) = if members.is_empty() {
        (0.0, tau2, tau2)
    } else {
        let pts: Vec<Vec<f64>> = members.iter().map(|&i| data.x[i].clone()).collect();
        let resid = DVector::from_iterator(pts.len(), members.iter().map(|&i| data.y[i] - global(&data.x[i]).0));
        let l_mat = cov(&pts, &pts, tau2, alpha);
        let mut noisy = l_mat.clone();
        let mut spatial = l_mat;
        for (j, &i) in members.iter().enumerate() {
            noisy[(j, j)] += data.noise[i] + local.jitter;
            spatial[(j, j)] += local.spatial_jitter;
        }
        let noisy_inv = inv(noisy);
        let spatial_inv = inv(spatial);
        let l = DVector::from_iterator(pts.len(), pts.iter().map(|p| tau2 * corr(x, p, alpha)));
        let mean = (l.transpose() * &noisy_inv * &resid)[(0, 0)];
        let var = tau2 - (l.transpose() * &noisy_inv * &l)[(0, 0)];
        let zv = tau2 - (l.transpose() * &spatial_inv * &l)[(0, 0)];
        (mean, var.max(0.0), zv.max(0.0))
    };
    let sd2 = st.sd * st.sd;
    [st.mean + st.sd * gmean, sd2 * gvar, st.sd * lmean, sd2 * lvar, sd2 * zvar]
}

/// Largest absolute deviation between `predict` and the dense oracle over
/// `probes` random locations.
pub fn oracle_gap(model: &AglgpModel, probes: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, "probe", &[]);
    let d = model.dim();
    let mut worst: f64 = 0.0;
    let mut probe_points: Vec<Vec<f64>> = (0..probes).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    probe_points.extend(model.data().x.iter().cloned());
    for x in probe_points {
        let p = model.predict(&x).unwrap();
        let o = dense_prediction(model, &x);
        let got = [p.mean_global, p.var_global, p.mean_local, p.var_local, p.var_z];
        for (a, b) in got.iter().zip(&o) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((p.mean_overall - (o[0] + o[2])).abs());
    }
    worst
}

/// Monte-Carlo estimate of `E[max(y_min - Y, 0)]`, `Y ~ N(mean, sd²)`,
/// with its standard error.
pub fn mc_improvement(mean: f64, sd: f64, y_min: f64, draws: usize, seed: u64) -> (f64, f64) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = stream(seed, "mc-ei", &[]);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let z: f64 = StandardNormal.sample(&mut rng);
        let v = (y_min - (mean + sd * z)).max(0.0);
        s += v;
        s2 += v * v;
    }
    let n = draws as f64;
    let m = s / n;
    (m, ((s2 / n - m * m).max(0.0) / n).sqrt())
}

/// Noisy samples of a smooth 2-D function on an LHS design.
pub fn smooth_archive(n: usize, seed: u64, reps: usize) -> DesignArchive {
    let mut rng = stream(seed, "smooth", &[]);
    let locs = latin_hypercube(n, &Bounds::unit(2), &mut rng);
    DesignArchive::from_points(
        locs.into_iter()
            .map(|x| {
                let f = (5.0 * x[0]).sin() + (3.0 * x[1]).cos() + 0.5 * x[0] * x[1];
                let var = 0.01;
                DesignPoint::from_stats(x, reps, f + 0.05 * rng.random_range(-1.0..1.0), var)
            })
            .collect(),
    )
}
