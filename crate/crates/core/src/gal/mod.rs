//! The assistance loop: Alice broadcasts pseudo-residuals, organizations fit
//! them, and Alice combines the fits with simplex weights and a line-searched
//! step.

mod ensemble;
mod line_search;
mod weights;

pub use ensemble::{initialize, Decision, EnsembleModel, EnsembleRound, ModelHandle, RoundRecord};
pub use line_search::{line_search, LineSearchMode, StepResult};
pub use weights::{combine, optimize_weights, WeightFit, WeightMode, WeightOpt};

use serde::{Deserialize, Serialize};

use crate::data::{views, Dataset, Labels, VerticalPartition};
use crate::error::{GalError, Result};
use crate::learners::LearnerSpec;
use crate::losses::{loss_value, pseudo_residual, LocalLoss, OverarchingLoss, ScoreMatrix};
use crate::privacy::{
    apply_prediction_channel, apply_residual_channel, residual_stream, Channel, InjectionCounts,
    Stage,
};
use crate::protocol::{CommLedger, InProcessTransport, OrgNode, ResidualBroadcast, Transport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalConfig {
    pub t_max: usize,
    #[serde(with = "extended_float")]
    pub eta_stop_threshold: f64,
    pub weight_mode: WeightMode,
    pub weight_opt: WeightOpt,
    pub line_search: LineSearchMode,
    pub overarching_loss: OverarchingLoss,
    /// One entry per organization, Alice first.
    pub learners: Vec<LearnerSpec>,
    pub local_losses: Vec<LocalLoss>,
    /// Loss used when fitting the assistance weights.
    pub alice_local_loss: LocalLoss,
    pub seed: u64,
    pub residual_channel: Channel,
    pub prediction_channel: Channel,
}

impl GalConfig {
    /// Defaults with the same learner and squared local loss everywhere.
    pub fn new(n_orgs: usize, loss: OverarchingLoss, learner: LearnerSpec) -> Self {
        GalConfig {
            t_max: 10,
            eta_stop_threshold: 1e-3,
            weight_mode: WeightMode::Optimized,
            weight_opt: WeightOpt::default(),
            line_search: LineSearchMode::Bracketing,
            overarching_loss: loss,
            learners: vec![learner; n_orgs],
            local_losses: vec![LocalLoss::squared(); n_orgs],
            alice_local_loss: LocalLoss::squared(),
            seed: 0,
            residual_channel: Channel::Identity,
            prediction_channel: Channel::Identity,
        }
    }

    pub fn n_orgs(&self) -> usize {
        self.learners.len()
    }

    pub fn validate(&self, n_orgs: usize) -> Result<()> {
        if self.t_max == 0 {
            return Err(GalError::invalid("t_max must be >= 1"));
        }
        if self.eta_stop_threshold.is_nan() || self.eta_stop_threshold < 0.0 {
            return Err(GalError::invalid("eta_stop_threshold must be >= 0"));
        }
        if self.learners.len() != n_orgs || self.local_losses.len() != n_orgs {
            return Err(GalError::invalid(format!(
                "{} learners and {} local losses for {n_orgs} organizations",
                self.learners.len(),
                self.local_losses.len()
            )));
        }
        if !(self.weight_opt.step_size > 0.0 && self.weight_opt.step_size.is_finite()) {
            return Err(GalError::invalid("weight step size must be finite and > 0"));
        }
        self.line_search.validate()?;
        for l in &self.learners {
            l.validate()?;
        }
        self.residual_channel.validate(n_orgs)?;
        self.prediction_channel.validate(n_orgs)?;
        if !matches!(
            self.prediction_channel,
            Channel::Identity | Channel::Gaussian { .. }
        ) {
            return Err(GalError::invalid(
                "prediction channel must be identity or gaussian",
            ));
        }
        Ok(())
    }

    /// The same run restricted to the listed organizations, renumbered from 1.
    pub fn restrict(&self, orgs: &[usize]) -> Result<Self> {
        let pick = |m: usize| {
            m.checked_sub(1)
                .filter(|&i| i < self.n_orgs())
                .ok_or_else(|| GalError::invalid(format!("org {m} out of range")))
        };
        let idx = orgs.iter().map(|&m| pick(m)).collect::<Result<Vec<_>>>()?;
        let renumber = |targets: &[usize]| -> Vec<usize> {
            targets
                .iter()
                .filter_map(|t| orgs.iter().position(|m| m == t).map(|p| p + 1))
                .collect()
        };
        let restrict_channel = |ch: &Channel| match ch {
            Channel::Gaussian { sigma, target_orgs } => Channel::Gaussian {
                sigma: *sigma,
                target_orgs: renumber(target_orgs),
            },
            other => other.clone(),
        };
        Ok(GalConfig {
            learners: idx.iter().map(|&i| self.learners[i].clone()).collect(),
            local_losses: idx.iter().map(|&i| self.local_losses[i]).collect(),
            residual_channel: restrict_channel(&self.residual_channel),
            prediction_channel: restrict_channel(&self.prediction_channel),
            ..self.clone()
        })
    }
}

/// Serializes non-finite reals as the strings `"inf"`, `"-inf"`, `"nan"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A finished learning run.
#[derive(Debug, Clone)]
pub struct GalRun {
    pub ensemble: EnsembleModel,
    /// `F^T` on the training rows.
    pub train_scores: ScoreMatrix,
    pub ledger: CommLedger,
    pub injections: InjectionCounts,
}

/// One node per organization from a partition of the training (and
/// optionally test) rows.
pub fn build_nodes(
    train: &Dataset,
    test: Option<&Dataset>,
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<Vec<OrgNode>> {
    config.validate(partition.n_orgs())?;
    let train_views = views(train, partition)?;
    let test_views = match test {
        Some(t) => views(t, partition)?.into_iter().map(Some).collect(),
        None => vec![None; partition.n_orgs()],
    };
    train_views
        .into_iter()
        .zip(test_views)
        .enumerate()
        .map(|(i, (tr, te))| {
            OrgNode::new(tr, te, config.learners[i].clone(), config.local_losses[i])
        })
        .collect()
}

/// Learning stage with every organization in-process.
pub fn run_learning(
    train: &Dataset,
    partition: &VerticalPartition,
    config: &GalConfig,
) -> Result<GalRun> {
    let mut transport = InProcessTransport::new(build_nodes(train, None, partition, config)?)?;
    run_with_transport(train.labels(), config, &mut transport)
}

/// Learning stage driven by Alice over any transport. `y` are Alice's
/// training labels; organizations hold the matching rows of their views.
pub fn run_with_transport(
    y: &Labels,
    config: &GalConfig,
    transport: &mut dyn Transport,
) -> Result<GalRun> {
    let m = transport.n_orgs();
    config.validate(m)?;
    let loss = config.overarching_loss;
    let f0 = initialize(y)?;
    let n = y.len();
    let k = f0.len();
    let mut ensemble = EnsembleModel {
        task: y.task(),
        f0,
        rounds: Vec::new(),
        initial_train_loss: 0.0,
        history: Vec::new(),
        config: config.clone(),
    };
    let mut scores = ensemble.initial_scores(n);
    ensemble.initial_train_loss = loss_value(loss, y, scores.view())?;
    let mut injections = InjectionCounts::default();
    let remote: Vec<usize> = (2..=m).collect();

    for t in 1..=config.t_max {
        let r = pseudo_residual(loss, y, scores.view())?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(GalError::Numeric(format!(
                "non-finite pseudo-residual in round {t}"
            )));
        }
        let clean = ResidualBroadcast::from_matrix(t, &r);
        transport.submit_local(&clean)?;
        if !remote.is_empty() {
            injections.residual += release_residual(transport, config, &r, &clean, &remote, t)?;
        }

        let fitted = transport.gather(t)?;
        let mut preds = Vec::with_capacity(m);
        for fp in &fitted {
            let p = fp.to_matrix()?;
            if p.dim() != (n, k) {
                return Err(GalError::shape(format!(
                    "org {} returned {:?}, expected {:?}",
                    fp.org,
                    p.dim(),
                    (n, k)
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(GalError::Numeric(format!(
                    "org {} returned non-finite predictions",
                    fp.org
                )));
            }
            preds.push(p);
        }
        injections.prediction += apply_prediction_channel(
            &config.prediction_channel,
            &mut preds,
            config.seed,
            Stage::Learning,
            t,
        )?;

        let wfit = optimize_weights(
            &r,
            &preds,
            config.alice_local_loss,
            config.weight_opt,
            config.weight_mode,
        )?;
        let g = combine(&wfit.weights, &preds);
        let step = line_search(loss, y, &scores, &g, config.line_search, t)?;
        scores.scaled_add(step.eta, &g);
        let train_loss = loss_value(loss, y, scores.view())?;

        let models = (1..=m)
            .map(|org| match transport.local_model(org, t) {
                Some(model) => ModelHandle::Local { model },
                None => ModelHandle::Remote { org, round: t },
            })
            .collect();
        ensemble.rounds.push(EnsembleRound {
            round: t,
            eta: step.eta,
            weights: wfit.weights.clone(),
            models,
        });
        ensemble.history.push(RoundRecord {
            round: t,
            train_loss,
            eta: step.eta,
            weights: wfit.weights,
            cap: step.cap,
            weight_objective: wfit.objective,
            uniform_objective: wfit.uniform_objective,
        });
        if step.eta.abs() < config.eta_stop_threshold {
            break;
        }
    }
    Ok(GalRun {
        ensemble,
        train_scores: scores,
        ledger: transport.ledger(),
        injections,
    })
}

/// Sends the round's residual to organizations `2..=M` through the
/// configured channel and returns the number of noisy releases.
fn release_residual(
    transport: &mut dyn Transport,
    config: &GalConfig,
    r: &ScoreMatrix,
    clean: &ResidualBroadcast,
    remote: &[usize],
    round: usize,
) -> Result<usize> {
    let ch = &config.residual_channel;
    if ch.is_identity() {
        transport.broadcast(clean, remote)?;
        return Ok(0);
    }
    if let Channel::Gaussian { .. } = ch {
        let (noisy, plain): (Vec<usize>, Vec<usize>) =
            remote.iter().partition(|&&org| ch.targets(org));
        if !plain.is_empty() {
            transport.broadcast(clean, &plain)?;
        }
        for &org in &noisy {
            let released =
                apply_residual_channel(ch, r, &mut residual_stream(config.seed, round, org))?;
            transport.broadcast(&ResidualBroadcast::from_matrix(round, &released), &[org])?;
        }
        return Ok(noisy.len());
    }
    let released = apply_residual_channel(ch, r, &mut residual_stream(config.seed, round, 0))?;
    transport.broadcast(&ResidualBroadcast::from_matrix(round, &released), remote)?;
    Ok(1)
}
