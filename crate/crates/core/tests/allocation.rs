use pglo::allocation::{enforce_min_replications, min_replications, ocba_allocate, ocba_weights, plan_stage};
use pglo::{DesignArchive, DesignPoint};
use proptest::prelude::*;

/// Archive of 1-D points with the given sample means and standard deviations.
fn archive(stats: &[(f64, f64)], reps: usize) -> DesignArchive {
    DesignArchive::from_points(
        stats
            .iter()
            .enumerate()
            .map(|(i, &(m, s))| DesignPoint::from_stats(vec![i as f64 / stats.len() as f64], reps, m, s * s))
            .collect(),
    )
}

#[test]
fn equal_competitors_get_equal_shares() {
    let a = archive(&[(0.0, 1.0), (1.0, 2.0), (1.0, 2.0)], 5);
    let plan = ocba_allocate(&a, 100);
    assert_eq!(plan.best_index, 0);
    assert_eq!(plan.replications[1], plan.replications[2]);
    assert_eq!(plan.total(), 100);
}

#[test]
fn doubled_noise_ratio_means_fourfold_allocation() {
    // sigma_1 / delta_1 = 2 * sigma_2 / delta_2
    let a = archive(&[(0.0, 1.0), (1.0, 2.0), (2.0, 2.0)], 5);
    let plan = ocba_allocate(&a, 2000);
    let (n1, n2) = (plan.replications[1] as f64, plan.replications[2] as f64);
    assert!((n1 - 4.0 * n2).abs() <= 4.0, "{n1} {n2}");
}

#[test]
fn zero_budget_plan_is_empty() {
    let a = archive(&[(0.0, 1.0), (1.0, 2.0)], 5);
    assert_eq!(ocba_allocate(&a, 0).replications, vec![0, 0]);
}

#[test]
fn best_point_follows_the_square_root_rule() {
    let means = [0.0, 1.0, 1.5, 3.0];
    let sds = [1.0, 0.5, 2.0, 1.0];
    let w = ocba_weights(&means, &sds, 0);
    let expected: f64 = (1..4).map(|i| (w[i] / sds[i]).powi(2)).sum::<f64>().sqrt() * sds[0];
    assert!((w[0] - expected).abs() < 1e-12);
    for i in 1..4 {
        assert!((w[i] - (sds[i] / means[i]).powi(2)).abs() < 1e-12);
    }
}

#[test]
fn tied_best_is_floored_not_infinite() {
    let a = archive(&[(0.0, 1.0), (0.0, 1.0), (1.0, 1.0)], 3);
    let plan = ocba_allocate(&a, 50);
    assert_eq!(plan.total(), 50);
    assert!(plan.replications[1] > plan.replications[2]);
}

#[test]
fn floor_examples() {
    assert_eq!(min_replications(100, 0.05), 5);
    assert_eq!(min_replications(10, 0.05), 1);
    let mut pts: Vec<DesignPoint> = (0..100).map(|i| DesignPoint::from_stats(vec![i as f64], 6, 0.0, 1.0)).collect();
    pts[7] = DesignPoint::from_stats(vec![7.0], 3, 0.0, 1.0);
    let deficits = enforce_min_replications(&DesignArchive::from_points(pts), 0.05);
    assert_eq!(deficits[7], 2);
    assert_eq!(deficits.iter().sum::<usize>(), 2);
    let mut pts: Vec<DesignPoint> = (0..200).map(|i| DesignPoint::from_stats(vec![i as f64], 10, 0.0, 1.0)).collect();
    let mut fresh = DesignPoint::new(vec![0.0]);
    fresh.observe(1.0);
    pts[0] = fresh;
    assert_eq!(enforce_min_replications(&DesignArchive::from_points(pts), 0.05)[0], 9);
}

#[test]
fn floor_takes_priority_over_a_small_budget() {
    let a = archive(&(0..100).map(|i| (i as f64, 1.0)).collect::<Vec<_>>(), 2);
    let plan = plan_stage(&a, 30, 0.05);
    assert_eq!(plan.floor.iter().sum::<usize>(), 300);
    assert_eq!(plan.ocba.total(), 0);
    assert!(plan.warning.is_some());
}

proptest! {
    #[test]
    fn ratios_follow_the_squared_rule(
        stats in prop::collection::vec((0.1f64..10.0, 0.1f64..5.0), 3..12),
        budget in 100usize..5000,
    ) {
        let mut stats = stats;
        stats[0].0 = 0.0;
        let a = archive(&stats, 4);
        let plan = ocba_allocate(&a, budget);
        prop_assert_eq!(plan.best_index, 0);
        prop_assert_eq!(plan.total(), budget);
        let w = ocba_weights(&a.means(), &stats.iter().map(|s| s.1).collect::<Vec<_>>(), 0);
        let total: f64 = w.iter().sum();
        for i in 1..stats.len() {
            let exact = budget as f64 * w[i] / total;
            prop_assert!((plan.replications[i] as f64 - exact).abs() < 1.0);
            for j in 1..stats.len() {
                let rule = (stats[i].1 / stats[i].0).powi(2) / (stats[j].1 / stats[j].0).powi(2);
                prop_assert!((w[i] / w[j] - rule).abs() <= 1e-9 * rule);
            }
        }
    }

    #[test]
    fn scaling_noise_keeps_proportions(stats in prop::collection::vec((0.1f64..10.0, 0.1f64..5.0), 3..10), c in 0.1f64..10.0) {
        let means: Vec<f64> = std::iter::once(0.0).chain(stats.iter().map(|s| s.0)).collect();
        let sds: Vec<f64> = std::iter::once(1.0).chain(stats.iter().map(|s| s.1)).collect();
        let scaled: Vec<f64> = sds.iter().map(|s| s * c).collect();
        let (w, v) = (ocba_weights(&means, &sds, 0), ocba_weights(&means, &scaled, 0));
        let (sw, sv): (f64, f64) = (w.iter().sum(), v.iter().sum());
        for (a, b) in w.iter().zip(&v) {
            prop_assert!((a / sw - b / sv).abs() < 1e-9);
        }
    }

    #[test]
    fn floor_holds_after_a_stage(reps in prop::collection::vec(1usize..12, 2..150), budget in 0usize..400) {
        let pts: Vec<DesignPoint> =
            reps.iter().enumerate().map(|(i, &r)| DesignPoint::from_stats(vec![i as f64], r, (i % 7) as f64, 1.0)).collect();
        let a = DesignArchive::from_points(pts);
        let plan = plan_stage(&a, budget, 0.05);
        let need = min_replications(a.len(), 0.05);
        for (p, add) in a.points().iter().zip(plan.combined()) {
            prop_assert!(p.replications + add >= need);
        }
        prop_assert!(plan.ocba.total() <= budget);
    }
}
