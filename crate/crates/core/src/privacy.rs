//! Noise channels on protocol traffic.
//!
//! Residual channels act on the pseudo-residual Alice releases to the other
//! organizations. Prediction channels corrupt what targeted organizations
//! send back, in both the learning and the prediction stage. Every noise
//! draw comes from a stream keyed by `(run seed, stage, round, org)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};
use crate::losses::ScoreMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    #[default]
    Identity,
    /// iid `Laplace(0, scale)` added to every entry.
    Laplace { scale: f64 },
    /// iid `N(0, sigma²)` added to entries of the targeted organizations.
    Gaussian { sigma: f64, target_orgs: Vec<usize> },
    /// Provisional one-interval release: sign of the entry times the column's
    /// mean magnitude. Only constructed when explicitly marked experimental.
    Interval { experimental: bool },
}

impl Channel {
    pub fn validate(&self, n_orgs: usize) -> Result<()> {
        match self {
            Channel::Identity => Ok(()),
            Channel::Laplace { scale } => {
                if *scale > 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(GalError::invalid(format!(
                        "laplace scale {scale} must be finite and > 0"
                    )))
                }
            }
            Channel::Gaussian { sigma, target_orgs } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(GalError::invalid(format!(
                        "gaussian sigma {sigma} must be finite and >= 0"
                    )));
                }
                if let Some(bad) = target_orgs.iter().find(|&&m| m == 0 || m > n_orgs) {
                    return Err(GalError::invalid(format!(
                        "target org {bad} out of range 1..={n_orgs}"
                    )));
                }
                Ok(())
            }
            Channel::Interval { experimental } => {
                if *experimental {
                    Ok(())
                } else {
                    Err(GalError::invalid(
                        "interval channel requires privacy.experimental = true",
                    ))
                }
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Channel::Identity => true,
            Channel::Gaussian { sigma, target_orgs } => *sigma == 0.0 || target_orgs.is_empty(),
            _ => false,
        }
    }

    /// Whether `org` receives a copy altered by this channel.
    pub fn targets(&self, org: usize) -> bool {
        match self {
            Channel::Identity => false,
            Channel::Gaussian { sigma, target_orgs } => *sigma > 0.0 && target_orgs.contains(&org),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Learning,
    Prediction,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one `(run, stage, round, org)` cell. Org 0 denotes a
/// broadcast shared by every recipient.
pub fn stream_seed(run_seed: u64, stage: Stage, round: usize, org: usize) -> u64 {
    let stage_tag = match stage {
        Stage::Learning => 1u64,
        Stage::Prediction => 2u64,
    };
    cell_seed(run_seed, stage_tag, round, org)
}

fn cell_seed(run_seed: u64, stage_tag: u64, round: usize, org: usize) -> u64 {
    let mut h = splitmix64(run_seed ^ 0x6A09_E667_F3BC_C908);
    for part in [stage_tag, round as u64, org as u64] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn stream(run_seed: u64, stage: Stage, round: usize, org: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(run_seed, stage, round, org))
}

/// Stream for residual noise, disjoint from the prediction-noise streams.
pub fn residual_stream(run_seed: u64, round: usize, org: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cell_seed(run_seed, 3, round, org))
}

/// One Laplace(0, b) draw by inverse CDF.
pub fn sample_laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn apply_residual_channel(
    channel: &Channel,
    residual: &ScoreMatrix,
    rng: &mut impl Rng,
) -> Result<ScoreMatrix> {
    match channel {
        Channel::Identity => Ok(residual.clone()),
        Channel::Laplace { scale } => Ok(residual.mapv(|v| v + sample_laplace(rng, *scale))),
        Channel::Gaussian { sigma, .. } => {
            Ok(residual.mapv(|v| v + sigma * rng.sample::<f64, _>(StandardNormal)))
        }
        Channel::Interval { experimental } => {
            if !experimental {
                return Err(GalError::invalid(
                    "interval channel requires privacy.experimental = true",
                ));
            }
            let mut out = residual.clone();
            for mut col in out.columns_mut() {
                let scale = col.iter().map(|v| v.abs()).sum::<f64>() / col.len().max(1) as f64;
                col.mapv_inplace(|v| if v == 0.0 { 0.0 } else { v.signum() * scale });
            }
            Ok(out)
        }
    }
}

/// Adds `N(0, sigma²)` to the predictions of targeted organizations.
/// `preds[i]` belongs to organization `i + 1`.
pub fn apply_prediction_channel(
    channel: &Channel,
    preds: &mut [ScoreMatrix],
    run_seed: u64,
    stage: Stage,
    round: usize,
) -> Result<usize> {
    match channel {
        Channel::Identity => Ok(0),
        Channel::Gaussian { sigma, target_orgs } => {
            channel.validate(preds.len())?;
            if *sigma == 0.0 {
                return Ok(0);
            }
            let mut injected = 0;
            for &org in target_orgs {
                let mut rng = stream(run_seed, stage, round, org);
                preds[org - 1].mapv_inplace(|v| v + sigma * rng.sample::<f64, _>(StandardNormal));
                injected += 1;
            }
            Ok(injected)
        }
        other => Err(GalError::invalid(format!(
            "{other:?} is not a prediction channel"
        ))),
    }
}

/// Count of noise applications, one per matrix and round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionCounts {
    pub residual: usize,
    pub prediction: usize,
}
