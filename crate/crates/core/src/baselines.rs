//! Comparison systems built from the same machinery as GAL: Alone, Joint,
//! Late fusion, and GAL with uniform weights.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, VerticalPartition};
use crate::error::{GalError, Result};
use crate::gal::{run_learning, EnsembleModel, GalConfig, GalRun, WeightMode};
use crate::losses::ScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    #[default]
    Gal,
    GalUniform,
    Alone,
    Joint,
    Late,
}

impl FromStr for RunKind {
    type Err = GalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gal" => Ok(RunKind::Gal),
            "gal_uniform" => Ok(RunKind::GalUniform),
            "alone" => Ok(RunKind::Alone),
            "joint" => Ok(RunKind::Joint),
            "late" => Ok(RunKind::Late),
            other => Err(GalError::invalid(format!(
                "unknown run kind {other:?} (expected gal, gal_uniform, alone, joint or late)"
            ))),
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunKind::Gal => "gal",
            RunKind::GalUniform => "gal_uniform",
            RunKind::Alone => "alone",
            RunKind::Joint => "joint",
            RunKind::Late => "late",
        })
    }
}

/// Partition and configuration of the single-organization systems.
pub fn alone_setup(
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<(VerticalPartition, GalConfig)> {
    Ok((partition.restrict(&[1])?, config.restrict(&[1])?))
}

/// Alice holds every feature and uses her own learner.
pub fn joint_setup(
    n_features: usize,
    config: &GalConfig,
) -> Result<(VerticalPartition, GalConfig)> {
    Ok((VerticalPartition::whole(n_features), config.restrict(&[1])?))
}

pub fn uniform_config(config: &GalConfig) -> GalConfig {
    GalConfig {
        weight_mode: WeightMode::Uniform,
        ..config.clone()
    }
}

pub fn run_alone(
    train: &Dataset,
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<GalRun> {
    let (p, c) = alone_setup(partition, config)?;
    run_learning(train, &p, &c)
}

pub fn run_joint(train: &Dataset, config: &GalConfig) -> Result<GalRun> {
    let (p, c) = joint_setup(train.n_features(), config)?;
    run_learning(train, &p, &c)
}

pub fn run_gal_uniform(
    train: &Dataset,
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<GalRun> {
    run_learning(train, partition, &uniform_config(config))
}

/// Independent single-organization models on the true labels, averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateModel {
    pub members: Vec<EnsembleModel>,
}

impl LateModel {
    /// Unweighted mean of member scores; `views[m]` belongs to member `m + 1`.
    pub fn predict(&self, views: &[ArrayView2<'_, f64>]) -> Result<ScoreMatrix> {
        if views.len() != self.members.len() {
            return Err(GalError::shape(format!(
                "{} views for {} members",
                views.len(),
                self.members.len()
            )));
        }
        let mut total: Option<ScoreMatrix> = None;
        for (member, v) in self.members.iter().zip(views) {
            let p = member.predict_local(std::slice::from_ref(v))?;
            match &mut total {
                Some(t) => *t += &p,
                None => total = Some(p),
            }
        }
        let total =
            total.ok_or_else(|| GalError::invalid("late fusion needs at least one member"))?;
        Ok(total / self.members.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct LateRun {
    pub model: LateModel,
    pub members: Vec<GalRun>,
    pub train_scores: ScoreMatrix,
}

/// Every organization boosts its own view on Alice's labels under the
/// overarching loss; this requires sharing the labels with all of them.
pub fn run_late(
    train: &Dataset,
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<LateRun> {
    config.validate(partition.n_orgs())?;
    let members = (1..=partition.n_orgs())
        .map(|m| run_learning(train, &partition.restrict(&[m])?, &config.restrict(&[m])?))
        .collect::<Result<Vec<_>>>()?;
    let mut train_scores = members[0].train_scores.clone();
    for run in &members[1..] {
        train_scores += &run.train_scores;
    }
    train_scores /= members.len() as f64;
    Ok(LateRun {
        model: LateModel {
            members: members.iter().map(|r| r.ensemble.clone()).collect(),
        },
        members,
        train_scores,
    })
}
