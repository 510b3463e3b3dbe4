mod common;

use common::{drawn_instance, oracle_gap, small_instance, smooth_archive};
use pglo::rng::stream;
use pglo::surrogate::{gaussian_correlation, partition_space, select_inducing_points, FitOptions, RegionPartition};
use pglo::AglgpModel;
use proptest::prelude::*;

#[test]
fn predictions_match_dense_oracle() {
    for seed in 0..20 {
        let model = drawn_instance(seed);
        let gap = oracle_gap(&model, 10, seed);
        assert!(gap < 1e-8, "seed {seed}: gap {gap:e}");
    }
}

#[test]
fn q_matrix_is_positive_definite() {
    for seed in 100..150 {
        let model = small_instance(seed);
        let q = model.q_matrix();
        assert!((&q - q.transpose()).amax() < 1e-10 * q.amax());
        let min_eig = q.symmetric_eigenvalues().min();
        assert!(min_eig > 0.0, "seed {seed}: {min_eig}");
    }
}

#[test]
fn correlation_examples() {
    assert_eq!(gaussian_correlation(&[0.3, 0.2], &[0.3, 0.2], &[2.0, 5.0]), 1.0);
    assert!((gaussian_correlation(&[0.0], &[1.0], &[1.0]) - (-1.0f64).exp()).abs() < 1e-15);
    let (a, b) = ([0.1, 0.7], [0.4, 0.2]);
    assert_eq!(gaussian_correlation(&a, &b, &[3.0, 1.5]), gaussian_correlation(&b, &a, &[3.0, 1.5]));
}

#[test]
fn two_clusters_split_into_two_regions() {
    let mut pts = Vec::new();
    for i in 0..5 {
        let e = 0.01 * i as f64;
        pts.push(vec![e, 0.02 - e]);
        pts.push(vec![1.0 - e, 0.98 + e / 2.0]);
    }
    let p = partition_space(&pts, 2, &mut stream(3, "kmeans", &[])).unwrap();
    let near_origin = p.region_of(&[0.1, 0.1]);
    assert_eq!(near_origin, p.region_of(&[0.0, 0.0]));
    assert_ne!(near_origin, p.region_of(&[1.0, 1.0]));
    for c in &p.centroids {
        let to_origin = (c[0] * c[0] + c[1] * c[1]).sqrt();
        assert!(to_origin < 0.05 || to_origin > 1.3, "{c:?}");
    }
}

#[test]
fn equidistant_points_go_to_the_lower_region() {
    let p = RegionPartition::from_centroids(vec![vec![0.25], vec![0.75]]);
    assert_eq!(p.region_of(&[0.5]), 0);
}

#[test]
fn too_many_regions_is_a_configuration_error() {
    let pts = vec![vec![0.2], vec![0.2], vec![0.7]];
    assert!(partition_space(&pts, 3, &mut stream(0, "kmeans", &[])).is_err());
}

#[test]
fn inducing_points_on_a_grid() {
    let grid: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64 + 0.5) / 10.0]).collect();
    let two = select_inducing_points(&grid, 2, &mut stream(4, "inducing", &[])).unwrap();
    let mut xs: Vec<f64> = two.iter().map(|z| z[0]).collect();
    xs.sort_by(f64::total_cmp);
    assert!(xs[0] < 0.5 && xs[1] > 0.5, "{xs:?}");
    for z in &two {
        assert!(grid.contains(z));
    }
    let all = select_inducing_points(&grid, 10, &mut stream(4, "inducing", &[])).unwrap();
    let mut sorted = all.clone();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(sorted, grid);
    assert!(select_inducing_points(&grid, 11, &mut stream(4, "inducing", &[])).is_err());
}

#[test]
fn one_inducing_point_per_separated_cluster() {
    let mut pts = Vec::new();
    for c in [0.1, 0.5, 0.9] {
        for e in [-0.01, 0.0, 0.01] {
            pts.push(vec![c + e, c - e]);
        }
    }
    let z = select_inducing_points(&pts, 3, &mut stream(9, "inducing", &[])).unwrap();
    for c in [0.1, 0.5, 0.9] {
        assert_eq!(z.iter().filter(|p| (p[0] - c).abs() < 0.05).count(), 1, "{z:?}");
    }
}

#[test]
fn fitted_hyperparameters_are_positive_and_deterministic() {
    let archive = smooth_archive(30, 5, 3);
    let partition = partition_space(&archive.locations(), 3, &mut stream(5, "kmeans", &[])).unwrap();
    let opts = FitOptions { seed: 11, ..FitOptions::default() };
    let a = AglgpModel::fit(&archive, &partition, 10, &opts).unwrap();
    let b = AglgpModel::fit(&archive, &partition, 10, &opts).unwrap();
    assert_eq!(a.snapshot(), b.snapshot());
    let g = a.global_hyper();
    assert!(g.sigma2 > 0.0 && g.theta.iter().all(|t| *t > 0.0));
    for h in a.local_hypers() {
        assert!(h.tau2 > 0.0 && h.alpha.iter().all(|t| *t > 0.0));
    }
}

#[test]
fn out_of_domain_prediction_is_rejected() {
    let model = small_instance(2);
    let mut x = vec![0.5; model.dim()];
    x[0] = 1.2;
    assert!(model.predict(&x).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prediction_invariants(seed in 0u64..1000, u in prop::collection::vec(0.0f64..=1.0, 2)) {
        let model = small_instance(seed);
        let x = &u[..model.dim()];
        let p = model.predict(x).unwrap();
        prop_assert_eq!(p.mean_overall, p.mean_global + p.mean_local);
        prop_assert!(p.var_global >= 0.0 && p.var_local >= 0.0 && p.var_z >= 0.0);
        let tau2 = model.local(p.region).hyper.tau2 * model.standardization().sd.powi(2);
        prop_assert!(p.var_z <= tau2 * (1.0 + 1e-12));
        let (lo, hi) = model.predictor_bounds();
        prop_assert!(lo <= p.mean_bounded && p.mean_bounded <= hi);
    }
}
