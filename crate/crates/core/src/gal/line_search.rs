use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::{GalError, Result};
use crate::losses::{loss_value, pseudo_residual, OverarchingLoss, ScoreMatrix};
use crate::optim::golden_search;

const MAX_STEP: f64 = 1e6;
const BRACKET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LineSearchMode {
    #[default]
    Bracketing,
    /// Steps restricted to `[−a/t, a/t]` in round `t`.
    Capped {
        a: f64,
    },
    Fixed {
        eta: f64,
    },
}

impl LineSearchMode {
    pub fn cap(&self, round: usize) -> Option<f64> {
        match *self {
            LineSearchMode::Capped { a } => Some(a / round as f64),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LineSearchMode::Capped { a } if !(a >= 0.0 && a.is_finite()) => Err(GalError::invalid(
                format!("cap schedule a = {a} must be finite and >= 0"),
            )),
            LineSearchMode::Fixed { eta } if !eta.is_finite() => {
                Err(GalError::invalid("fixed step must be finite"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub eta: f64,
    pub value: f64,
    pub cap: Option<f64>,
}

/// Step along `g` minimizing `φ(η) = L(y, F + η·g)`.
///
/// Bracket expansion and golden-section search locate the minimizer; on a
/// smooth loss a safeguarded secant on `φ'` then refines it inside the
/// final bracket. The returned value never exceeds `φ(0)`.
pub fn line_search(
    loss: OverarchingLoss,
    y: &Labels,
    f: &ScoreMatrix,
    g: &ScoreMatrix,
    mode: LineSearchMode,
    round: usize,
) -> Result<StepResult> {
    if f.dim() != g.dim() {
        return Err(GalError::shape(format!(
            "direction {:?} vs scores {:?}",
            g.dim(),
            f.dim()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(GalError::Numeric("non-finite search direction".into()));
    }
    let cap = mode.cap(round);
    let phi = |eta: f64| -> Result<f64> {
        let v = loss_value(loss, y, (f + &(g * eta)).view())?;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    };
    let phi0 = phi(0.0)?;
    if let LineSearchMode::Fixed { eta } = mode {
        return Ok(StepResult {
            eta,
            value: phi(eta)?,
            cap,
        });
    }
    let zero = StepResult {
        eta: 0.0,
        value: phi0,
        cap,
    };
    if g.iter().all(|&v| v == 0.0) {
        return Ok(zero);
    }

    let (lo, hi) = match cap {
        Some(c) if c <= 0.0 => return Ok(zero),
        Some(c) => (-c, c),
        None => bracket(&phi, phi0)?,
    };

    let mut err = None;
    let found = golden_search(
        |eta| match phi(eta) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        BRACKET_TOL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let mut best = (found.x, found.value);
    if loss.is_smooth() {
        let lo = found.lo.max(lo);
        let hi = found.hi.min(hi);
        if let Some(eta) = secant_polish(loss, y, f, g, lo, hi)? {
            let value = phi(eta)?;
            // The stationary point is preferred over the golden-section probe
            // whenever the two are equal up to rounding.
            if value <= best.1 + 1e-12 * (1.0 + best.1.abs()) {
                best = (eta, value);
            }
        }
    }
    if best.1 < phi0 {
        Ok(StepResult {
            eta: best.0,
            value: best.1,
            cap,
        })
    } else {
        Ok(zero)
    }
}

/// Expands from `[0, ±1]` by doubling until `φ` turns upward.
fn bracket(phi: &impl Fn(f64) -> Result<f64>, phi0: f64) -> Result<(f64, f64)> {
    let up = phi(1.0)?;
    let down = phi(-1.0)?;
    let sign = if up < phi0 && up <= down {
        1.0
    } else if down < phi0 {
        -1.0
    } else {
        return Ok((-1.0, 1.0));
    };
    let (mut prev, mut cur, mut cur_val): (f64, f64, f64) =
        (0.0, sign, if sign > 0.0 { up } else { down });
    loop {
        let next = cur * 2.0;
        if next.abs() > MAX_STEP {
            return Ok(order(prev, sign * MAX_STEP));
        }
        let next_val = phi(next)?;
        if next_val >= cur_val {
            return Ok(order(prev, next));
        }
        prev = cur;
        cur = next;
        cur_val = next_val;
    }
}

fn order(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `φ'(η) = −mean_i ⟨r_i(F + η·g), g_i⟩` for losses whose pseudo-residual
/// is the exact negative gradient.
fn slope(
    loss: OverarchingLoss,
    y: &Labels,
    f: &ScoreMatrix,
    g: &ScoreMatrix,
    eta: f64,
) -> Result<f64> {
    let r = pseudo_residual(loss, y, (f + &(g * eta)).view())?;
    Ok(-(&r * g).sum() / f.nrows() as f64)
}

/// Illinois-modified regula falsi on `φ'` over `[lo, hi]`; `None` when the
/// slope does not change sign there.
fn secant_polish(
    loss: OverarchingLoss,
    y: &Labels,
    f: &ScoreMatrix,
    g: &ScoreMatrix,
    mut lo: f64,
    mut hi: f64,
) -> Result<Option<f64>> {
    let mut s_lo = slope(loss, y, f, g, lo)?;
    let mut s_hi = slope(loss, y, f, g, hi)?;
    if !(s_lo.is_finite() && s_hi.is_finite()) || s_lo > 0.0 || s_hi < 0.0 {
        return Ok(None);
    }
    if s_lo == 0.0 {
        return Ok(Some(lo));
    }
    if s_hi == 0.0 {
        return Ok(Some(hi));
    }
    let mut side = 0i8;
    let mut x = f64::NAN;
    for _ in 0..60 {
        let prev = x;
        x = (lo * s_hi - hi * s_lo) / (s_hi - s_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let s = slope(loss, y, f, g, x)?;
        let settled = (x - prev).abs() <= 2.0 * f64::EPSILON * x.abs();
        if s == 0.0 || settled || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
        if s < 0.0 {
            lo = x;
            s_lo = s;
            if side == -1 {
                s_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            s_hi = s;
            if side == 1 {
                s_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(Some(x))
}
