use nalgebra::{DMatrix, DVector};

/// Squared-exponential correlation `exp(-sum_j theta_j (a_j - b_j)^2)`.
pub fn gaussian_correlation(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..theta.len() {
        let d = a[j] - b[j];
        s += theta[j] * d * d;
    }
    (-s).exp()
}

/// `variance * corr(rows_i, cols_j)` as a dense matrix.
pub fn cross_cov(rows: &[Vec<f64>], cols: &[Vec<f64>], variance: f64, theta: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| variance * gaussian_correlation(&rows[i], &cols[j], theta))
}

pub fn cov_vector(x: &[f64], pts: &[Vec<f64>], variance: f64, theta: &[f64]) -> DVector<f64> {
    DVector::from_iterator(pts.len(), pts.iter().map(|p| variance * gaussian_correlation(x, p, theta)))
}

/// Symmetric covariance matrix of `pts`.
pub fn self_cov(pts: &[Vec<f64>], variance: f64, theta: &[f64]) -> DMatrix<f64> {
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = variance;
        for j in 0..i {
            let c = variance * gaussian_correlation(&pts[i], &pts[j], theta);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_distance_is_one() {
        assert_eq!(gaussian_correlation(&[0.3, 0.7], &[0.3, 0.7], &[5.0, 2.0]), 1.0);
    }

    #[test]
    fn unit_distance_unit_theta() {
        let c = gaussian_correlation(&[0.0], &[1.0], &[1.0]);
        assert!((c - (-1.0f64).exp()).abs() < 1e-15);
        assert!((c - 0.367879).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in proptest::collection::vec(-1.0f64..1.0, 3),
                                 b in proptest::collection::vec(-1.0f64..1.0, 3),
                                 t in proptest::collection::vec(1e-3f64..1e3, 3)) {
            let ab = gaussian_correlation(&a, &b, &t);
            let ba = gaussian_correlation(&b, &a, &t);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab > 0.0 || ab == 0.0);
            prop_assert!(ab <= 1.0);
            if a != b {
                prop_assert!(ab < 1.0);
            }
        }
    }
}
