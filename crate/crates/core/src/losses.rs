//! Overarching losses with their pseudo-residuals, and the `ℓ_q` family used
//! by organizations to fit those residuals.
//!
//! Score matrices are N×K: K=1 for regression, K classes otherwise. Class
//! scores are unnormalized; the softmax lives inside the cross-entropy loss.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::{GalError, Result};

/// N×K matrix of ensemble outputs, residuals, or local predictions.
pub type ScoreMatrix = Array2<f64>;

/// Alice's loss `L_1` on the true labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverarchingLoss {
    /// Mean of `½(y − F)²`.
    Squared,
    /// Mean of `|y − F|`.
    Absolute,
    /// Mean of `−Σ_k y_k log softmax(F)_k`.
    CrossEntropy,
}

impl OverarchingLoss {
    /// Convex along any line and continuously differentiable.
    pub fn is_smooth(self) -> bool {
        !matches!(self, OverarchingLoss::Absolute)
    }
}

impl FromStr for OverarchingLoss {
    type Err = GalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(OverarchingLoss::Squared),
            "absolute" => Ok(OverarchingLoss::Absolute),
            "cross_entropy" => Ok(OverarchingLoss::CrossEntropy),
            other => Err(GalError::invalid(format!(
                "unknown overarching loss {other:?}"
            ))),
        }
    }
}

impl fmt::Display for OverarchingLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverarchingLoss::Squared => "squared",
            OverarchingLoss::Absolute => "absolute",
            OverarchingLoss::CrossEntropy => "cross_entropy",
        })
    }
}

/// `ℓ_q(t, p) = |t − p|^q` with `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LocalLoss {
    q: f64,
}

impl LocalLoss {
    pub fn new(q: f64) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(GalError::invalid(format!(
                "local loss exponent q={q} must be finite and >= 1"
            )));
        }
        Ok(LocalLoss { q })
    }

    pub fn squared() -> Self {
        LocalLoss { q: 2.0 }
    }

    pub fn q(self) -> f64 {
        self.q
    }

    #[inline]
    pub fn eval(self, target: f64, pred: f64) -> f64 {
        let e = (target - pred).abs();
        if self.q == 2.0 {
            e * e
        } else if self.q == 1.0 {
            e
        } else {
            e.powf(self.q)
        }
    }

    /// Derivative of `|t − p|^q` in `p`; zero at `t == p`.
    #[inline]
    pub fn derivative(self, target: f64, pred: f64) -> f64 {
        let diff = pred - target;
        if diff == 0.0 {
            return 0.0;
        }
        if self.q == 2.0 {
            2.0 * diff
        } else if self.q == 1.0 {
            diff.signum()
        } else {
            self.q * diff.abs().powf(self.q - 1.0) * diff.signum()
        }
    }
}

impl FromStr for LocalLoss {
    type Err = GalError;

    fn from_str(s: &str) -> Result<Self> {
        let q = s
            .strip_prefix("lq:")
            .ok_or_else(|| GalError::invalid(format!("local loss {s:?} must look like lq:<q>")))?;
        let q: f64 = q
            .parse()
            .map_err(|_| GalError::invalid(format!("bad exponent in local loss {s:?}")))?;
        LocalLoss::new(q)
    }
}

impl TryFrom<String> for LocalLoss {
    type Error = GalError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LocalLoss> for String {
    fn from(l: LocalLoss) -> String {
        l.to_string()
    }
}

impl fmt::Display for LocalLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lq:{}", self.q)
    }
}

fn check_shapes(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(GalError::shape(format!("{what}: {a:?} vs {b:?}")));
    }
    if a.0 == 0 {
        return Err(GalError::shape(format!("{what}: no rows")));
    }
    Ok(())
}

fn check_labels(loss: OverarchingLoss, y: &Labels, f: &ArrayView2<'_, f64>) -> Result<()> {
    check_shapes((y.len(), y.width()), f.dim(), "labels vs scores")?;
    match (loss, y) {
        (OverarchingLoss::CrossEntropy, Labels::Regression(_)) => Err(GalError::invalid(
            "cross-entropy needs classification labels",
        )),
        _ => Ok(()),
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = scores.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

fn log_sum_exp(row: ndarray::ArrayView1<'_, f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Empirical risk of `scores` against `y`, averaged over observations.
pub fn loss_value(loss: OverarchingLoss, y: &Labels, scores: ArrayView2<'_, f64>) -> Result<f64> {
    check_labels(loss, y, &scores)?;
    let n = scores.nrows() as f64;
    let total = match (loss, y) {
        (OverarchingLoss::Squared, _) => {
            let y = y.as_matrix();
            Zip::from(&y).and(&scores).fold(0.0, |acc, &t, &p| {
                let e = t - p;
                acc + 0.5 * e * e
            })
        }
        (OverarchingLoss::Absolute, _) => {
            let y = y.as_matrix();
            Zip::from(&y)
                .and(&scores)
                .fold(0.0, |acc, &t, &p| acc + (t - p).abs())
        }
        (OverarchingLoss::CrossEntropy, Labels::Classification { onehot, .. }) => onehot
            .rows()
            .into_iter()
            .zip(scores.rows())
            .map(|(t, s)| {
                let lse = log_sum_exp(s);
                t.iter()
                    .zip(s.iter())
                    .map(|(&tk, &sk)| tk * (lse - sk))
                    .sum::<f64>()
            })
            .sum(),
        (OverarchingLoss::CrossEntropy, Labels::Regression(_)) => unreachable!("checked above"),
    };
    Ok(total / n)
}

/// Negative gradient of the per-observation loss with respect to the scores.
pub fn pseudo_residual(
    loss: OverarchingLoss,
    y: &Labels,
    scores: ArrayView2<'_, f64>,
) -> Result<ScoreMatrix> {
    check_labels(loss, y, &scores)?;
    let y = y.as_matrix();
    Ok(match loss {
        OverarchingLoss::Squared => &y - &scores,
        OverarchingLoss::Absolute => Zip::from(&y).and(&scores).map_collect(|&t, &p| {
            let e = t - p;
            if e == 0.0 {
                0.0
            } else {
                e.signum()
            }
        }),
        OverarchingLoss::CrossEntropy => y - softmax_rows(scores),
    })
}

/// Mean of `|target − pred|^q` over all N·K entries.
pub fn local_loss_value(
    loss: LocalLoss,
    target: ArrayView2<'_, f64>,
    pred: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_shapes(target.dim(), pred.dim(), "local loss")?;
    let total = Zip::from(&target)
        .and(&pred)
        .fold(0.0, |acc, &t, &p| acc + loss.eval(t, p));
    Ok(total / target.len() as f64)
}

/// Gradient of [`local_loss_value`] with respect to `pred`.
pub fn local_loss_gradient(
    loss: LocalLoss,
    target: ArrayView2<'_, f64>,
    pred: ArrayView2<'_, f64>,
) -> Result<ScoreMatrix> {
    check_shapes(target.dim(), pred.dim(), "local loss gradient")?;
    let scale = 1.0 / target.len() as f64;
    Ok(Zip::from(&target)
        .and(&pred)
        .map_collect(|&t, &p| loss.derivative(t, p) * scale))
}

/// Class index with the highest score per row, lowest index on ties.
pub fn argmax_rows(scores: ArrayView2<'_, f64>) -> Vec<usize> {
    scores
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
