use nalgebra::{DMatrix, DVector};

/// Relative jitter levels tried in order (multiples of the mean diagonal).
pub const JITTER_LEVELS: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Lower Cholesky factor of `a + jitter * I` for a fixed absolute jitter.
pub fn cholesky_with(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += jitter;
    }
    m.cholesky().map(|c| c.l())
}

/// Cholesky with adaptive jitter: starts at `1e-10 * trace / n` and escalates
/// tenfold up to `1e-4 * trace / n`. Returns the factor and absolute jitter.
pub fn cholesky_adaptive(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    if n == 0 {
        return Some((DMatrix::zeros(0, 0), 0.0));
    }
    let scale = a.trace() / n as f64;
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    JITTER_LEVELS.iter().find_map(|&rel| cholesky_with(a, rel * scale).map(|l| (l, rel * scale)))
}

pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

pub fn solve_upper_transpose(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `(L L') x = b`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    solve_upper_transpose(l, &solve_lower(l, b))
}

pub fn log_det_from_factor(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Inverse of `L L'` from its factor.
pub fn cholesky_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        inv.set_column(j, &cholesky_solve(l, &e));
    }
    inv
}

/// Extends the factor of `A` to the factor of `[[A, c], [c', d]]`.
pub fn cholesky_append(l: &DMatrix<f64>, c: &DVector<f64>, d: f64) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    let w = solve_lower(l, c);
    let diag2 = d - w.norm_squared();
    if !(diag2 > 0.0) {
        return None;
    }
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(l);
    for k in 0..n {
        out[(n, k)] = w[k];
    }
    out[(n, n)] = diag2.sqrt();
    Some(out)
}
