//! Brute-force reference computations.
//!
//! Each routine here deliberately avoids the optimized code paths it is used
//! to check: grids instead of line searches, Gaussian elimination instead of
//! Cholesky, closed-form boosting steps instead of the assistance loop.

use ndarray::{Array1, Array2, ArrayView2};

use crate::data::Labels;
use crate::error::Result;
use crate::learners::{fit, LearnerSpec, LocalModel};
use crate::losses::{loss_value, LocalLoss, OverarchingLoss};

/// Central finite differences of `f` at every entry of `x`.
pub fn finite_difference(
    x: &Array2<f64>,
    h: f64,
    mut f: impl FnMut(&Array2<f64>) -> f64,
) -> Array2<f64> {
    let mut grad = Array2::zeros(x.dim());
    let mut probe = x.clone();
    for idx in 0..x.len() {
        let (i, j) = (idx / x.ncols(), idx % x.ncols());
        let orig = probe[[i, j]];
        probe[[i, j]] = orig + h;
        let up = f(&probe);
        probe[[i, j]] = orig - h;
        let down = f(&probe);
        probe[[i, j]] = orig;
        grad[[i, j]] = (up - down) / (2.0 * h);
    }
    grad
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))?;
        if m[[pivot, col]].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap([pivot, k], [col, k]);
            }
            rhs.swap(pivot, col);
        }
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            for k in col..n {
                m[[row, k]] -= factor * m[[col, k]];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[[row, k]] * x[k];
        }
        x[row] = s / m[[row, row]];
    }
    Some(x)
}

/// Ordinary least squares with intercept via the normal equations. Returns
/// fitted values on `x`.
pub fn ols_fitted(x: ArrayView2<'_, f64>, y: &Array1<f64>) -> Option<Array1<f64>> {
    let (n, d) = x.dim();
    let mut aug = Array2::ones((n, d + 1));
    aug.slice_mut(ndarray::s![.., 1..]).assign(&x);
    let theta = solve_dense(&aug.t().dot(&aug), &aug.t().dot(y))?;
    Some(aug.dot(&theta))
}

/// Minimum of `loss(y, F + η·g)` over the grid `lo, lo+step, …, hi`.
pub fn grid_line_search(
    loss: OverarchingLoss,
    y: &Labels,
    f: &Array2<f64>,
    g: &Array2<f64>,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let count = ((hi - lo) / step).round() as usize;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=count {
        let eta = lo + step * i as f64;
        let value = loss_value(loss, y, (f + &(g * eta)).view())?;
        if value < best.1 {
            best = (eta, value);
        }
    }
    Ok(best)
}

/// Weight objective `mean ℓ(r, w·a + (1 − w)·b)` minimized over the grid
/// `w ∈ {0, 1/steps, …, 1}`.
pub fn grid_weights_two(
    r: &Array2<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
    loss: LocalLoss,
    steps: usize,
) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=steps {
        let w = i as f64 / steps as f64;
        let mix = a * w + &(b * (1.0 - w));
        let value = r
            .iter()
            .zip(mix.iter())
            .map(|(&t, &p)| loss.eval(t, p))
            .sum::<f64>()
            / r.len() as f64;
        if value < best.1 {
            best = (w, value);
        }
    }
    best
}

/// Textbook least-squares gradient boosting: residual `y − F`, fit, exact
/// step `⟨r, h⟩ / ⟨h, h⟩`.
pub struct PlainBoosting {
    pub base: f64,
    pub stages: Vec<(f64, LocalModel)>,
}

impl PlainBoosting {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        y: &Array1<f64>,
        spec: &LearnerSpec,
        rounds: usize,
    ) -> Result<Self> {
        let base = y.sum() / y.len() as f64;
        let mut current = Array1::from_elem(y.len(), base);
        let mut stages = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let residual = (y - &current).insert_axis(ndarray::Axis(1));
            let model = fit(spec, x, residual.view(), LocalLoss::squared())?;
            let h = model.predict(x)?.column(0).to_owned();
            let hh = h.dot(&h);
            let step = if hh > 0.0 {
                residual.column(0).dot(&h) / hh
            } else {
                0.0
            };
            current += &(&h * step);
            stages.push((step, model));
        }
        Ok(PlainBoosting { base, stages })
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let mut out = Array1::from_elem(x.nrows(), self.base);
        for (step, model) in &self.stages {
            out += &(model.predict(x)?.column(0).to_owned() * *step);
        }
        Ok(out)
    }
}

/// Accuracy of assigning each row to its nearest center.
pub fn nearest_center_accuracy(
    x: ArrayView2<'_, f64>,
    centers: &Array2<f64>,
    classes: &[usize],
) -> f64 {
    let correct = x
        .rows()
        .into_iter()
        .zip(classes)
        .filter(|(row, &c)| {
            let nearest = (0..centers.nrows())
                .min_by(|&a, &b| {
                    let da = (row - &centers.row(a)).mapv(|v| v * v).sum();
                    let db = (row - &centers.row(b)).mapv(|v| v * v).sum();
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            nearest == c
        })
        .count();
    correct as f64 / classes.len().max(1) as f64
}
