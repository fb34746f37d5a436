use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};
use crate::losses::{local_loss_gradient, local_loss_value, LocalLoss, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Optimized,
    Uniform,
}

/// Budget of the logit optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightOpt {
    pub iterations: usize,
    pub step_size: f64,
}

impl Default for WeightOpt {
    fn default() -> Self {
        WeightOpt {
            iterations: 100,
            step_size: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub uniform_objective: f64,
}

/// `Σ_m w_m·preds_m`, accumulated in organization order.
pub fn combine(weights: &[f64], preds: &[ScoreMatrix]) -> ScoreMatrix {
    let mut g = ScoreMatrix::zeros(preds[0].dim());
    for (w, p) in weights.iter().zip(preds) {
        g.scaled_add(*w, p);
    }
    g
}

fn softmax(z: &Array1<f64>) -> Vec<f64> {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e = z.mapv(|v| (v - max).exp());
    let s = e.sum();
    e.iter().map(|v| v / s).collect()
}

/// Simplex weights minimizing `mean ℓ(r, Σ w_m preds_m)`.
///
/// Optimized mode starts from uniform weights (`z = 0`) and takes
/// exponentiated-gradient steps on the logits, `z ← z − s·∇_w J`, with the
/// step `s` doubled after each accepted step and halved after each
/// rejected one. Steps are accepted only on strict decrease, so the result
/// never loses to uniform weights.
pub fn optimize_weights(
    r: &ScoreMatrix,
    preds: &[ScoreMatrix],
    loss: LocalLoss,
    opt: WeightOpt,
    mode: WeightMode,
) -> Result<WeightFit> {
    let m = preds.len();
    if m == 0 {
        return Err(GalError::invalid("no predictions to weight"));
    }
    if let Some(p) = preds.iter().find(|p| p.dim() != r.dim()) {
        return Err(GalError::shape(format!(
            "prediction {:?} does not match residual {:?}",
            p.dim(),
            r.dim()
        )));
    }
    let objective = |w: &[f64]| local_loss_value(loss, r.view(), combine(w, preds).view());
    let uniform = vec![1.0 / m as f64; m];
    let uniform_objective = objective(&uniform)?;
    if m == 1 || mode == WeightMode::Uniform {
        let weights = if m == 1 { vec![1.0] } else { uniform };
        let value = objective(&weights)?;
        return Ok(WeightFit {
            weights,
            objective: value,
            uniform_objective,
        });
    }

    // Relative decrease a step must achieve; keeps accept decisions clear of
    // rounding noise in the objective.
    const MARGIN: f64 = 1e-13;
    const MAX_HALVINGS: usize = 40;
    let mut z = Array1::<f64>::zeros(m);
    let mut w = uniform;
    let mut value = uniform_objective;
    let mut step = f64::NAN;
    'outer: for _ in 0..opt.iterations {
        let grad_out = local_loss_gradient(loss, r.view(), combine(&w, preds).view())?;
        let dw: Vec<f64> = preds.iter().map(|p| (&grad_out * p).sum()).collect();
        // Centered gradient in pairwise form: exactly zero when all dw agree.
        let centered = Array1::from_shape_fn(m, |j| {
            w.iter()
                .zip(&dw)
                .map(|(wm, gm)| wm * (dw[j] - gm))
                .sum::<f64>()
        });
        let scale = centered.fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        if step.is_nan() {
            step = opt.step_size / scale;
        }
        for _ in 0..MAX_HALVINGS {
            let trial_z = &z - &(&centered * step);
            let trial_w = softmax(&trial_z);
            let trial = objective(&trial_w)?;
            if trial < value - MARGIN * value.abs() {
                z = trial_z;
                w = trial_w;
                value = trial;
                step *= 2.0;
                continue 'outer;
            }
            step *= 0.5;
        }
        break;
    }
    Ok(WeightFit {
        weights: w,
        objective: value,
        uniform_objective,
    })
}
