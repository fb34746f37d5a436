//! Dense helpers for the small symmetric systems that ridge fits produce.

use ndarray::{Array1, Array2};

/// Solves `a·x = b` for symmetric positive definite `a` by Cholesky.
/// Returns `None` when a pivot is not positive.
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !diag.is_finite() || diag <= 0.0 {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Some(x)
}

/// Cholesky solve that retries with a growing diagonal jitter if `a` is
/// singular to working precision. The jitter starts at `1e-12·trace/n`.
pub fn spd_solve_regularized(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    if let Some(x) = cholesky_solve(a, b) {
        return x;
    }
    let n = a.nrows().max(1);
    let trace: f64 = (0..a.nrows()).map(|i| a[[i, i]]).sum();
    let mut jitter = (trace / n as f64).max(f64::MIN_POSITIVE) * 1e-12;
    loop {
        let mut shifted = a.clone();
        for i in 0..a.nrows() {
            shifted[[i, i]] += jitter;
        }
        if let Some(x) = cholesky_solve(&shifted, b) {
            return x;
        }
        jitter *= 10.0;
        if !jitter.is_finite() {
            return Array1::zeros(a.nrows());
        }
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration.
pub fn max_eigenvalue(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 0.1 * i as f64);
    v /= v.dot(&v).sqrt();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = a.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}
