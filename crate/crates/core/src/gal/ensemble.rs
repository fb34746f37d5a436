use std::fmt::Write as _;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Labels, Task};
use crate::error::{GalError, Result};
use crate::learners::LocalModel;
use crate::losses::{argmax_rows, ScoreMatrix};
use crate::privacy::{apply_prediction_channel, Stage};
use crate::protocol::Transport;

use super::weights::combine;
use super::GalConfig;

/// Where the fitted model of one organization and round lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "location", rename_all = "snake_case")]
pub enum ModelHandle {
    Local {
        model: LocalModel,
    },
    /// Held privately by the organization; reachable through a transport.
    Remote {
        org: usize,
        round: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRound {
    pub round: usize,
    pub eta: f64,
    pub weights: Vec<f64>,
    pub models: Vec<ModelHandle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub eta: f64,
    pub weights: Vec<f64>,
    /// Step bound in capped mode.
    pub cap: Option<f64>,
    pub weight_objective: f64,
    pub uniform_objective: f64,
}

/// `F⁰ + Σ_t η_t Σ_m w_{m,t} f_{m,t}`. Immutable after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub task: Task,
    pub f0: Vec<f64>,
    pub rounds: Vec<EnsembleRound>,
    pub initial_train_loss: f64,
    pub history: Vec<RoundRecord>,
    pub config: GalConfig,
}

/// Final decision per row.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Values(Array1<f64>),
    Classes(Vec<usize>),
}

impl EnsembleModel {
    pub fn n_orgs(&self) -> usize {
        self.config.learners.len()
    }

    pub fn initial_scores(&self, n: usize) -> ScoreMatrix {
        let row =
            ArrayView2::from_shape((1, self.f0.len()), &self.f0).unwrap_or_else(|_| unreachable!());
        row.broadcast((n, self.f0.len()))
            .unwrap_or_else(|| unreachable!())
            .to_owned()
    }

    /// Scores after each round, starting with `F⁰`; `views[m]` is
    /// organization `m + 1`'s columns. Every model must be held locally.
    pub fn predict_path_local(&self, views: &[ArrayView2<'_, f64>]) -> Result<Vec<ScoreMatrix>> {
        if views.len() != self.n_orgs() {
            return Err(GalError::shape(format!(
                "{} views for {} organizations",
                views.len(),
                self.n_orgs()
            )));
        }
        let n = views.first().map_or(0, |v| v.nrows());
        if views.iter().any(|v| v.nrows() != n) {
            return Err(GalError::shape("views disagree on row count"));
        }
        let mut scores = self.initial_scores(n);
        let mut path = vec![scores.clone()];
        for round in &self.rounds {
            let preds = round
                .models
                .iter()
                .zip(views)
                .map(|(h, v)| match h {
                    ModelHandle::Local { model } => model.predict(*v),
                    ModelHandle::Remote { org, round } => Err(GalError::invalid(format!(
                        "model of org {org}, round {round} is held remotely"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            scores.scaled_add(round.eta, &combine(&round.weights, &preds));
            path.push(scores.clone());
        }
        Ok(path)
    }

    pub fn predict_local(&self, views: &[ArrayView2<'_, f64>]) -> Result<ScoreMatrix> {
        Ok(self
            .predict_path_local(views)?
            .pop()
            .unwrap_or_else(|| unreachable!()))
    }

    /// Prediction stage over a transport: organizations evaluate their own
    /// models on their held-out rows. Applies the configured prediction
    /// channel. Returns the score path and the number of noise injections.
    pub fn predict_path(
        &self,
        transport: &mut dyn Transport,
        n_star: usize,
    ) -> Result<(Vec<ScoreMatrix>, usize)> {
        if transport.n_orgs() != self.n_orgs() {
            return Err(GalError::invalid(format!(
                "transport has {} organizations, ensemble {}",
                transport.n_orgs(),
                self.n_orgs()
            )));
        }
        let mut scores = self.initial_scores(n_star);
        let mut path = vec![scores.clone()];
        if self.rounds.is_empty() {
            return Ok((path, 0));
        }
        let model_rounds: Vec<usize> = self.rounds.iter().map(|r| r.round).collect();
        let responses = transport.predict(&model_rounds, n_star)?;
        let per_org = responses
            .iter()
            .map(|r| r.matrices())
            .collect::<Result<Vec<_>>>()?;
        let mut injected = 0;
        for (i, round) in self.rounds.iter().enumerate() {
            let mut preds: Vec<ScoreMatrix> = per_org.iter().map(|p| p[i].clone()).collect();
            if let Some(p) = preds.iter().find(|p| p.dim() != scores.dim()) {
                return Err(GalError::shape(format!(
                    "prediction {:?}, expected {:?}",
                    p.dim(),
                    scores.dim()
                )));
            }
            injected += apply_prediction_channel(
                &self.config.prediction_channel,
                &mut preds,
                self.config.seed,
                Stage::Prediction,
                round.round,
            )?;
            scores.scaled_add(round.eta, &combine(&round.weights, &preds));
            path.push(scores.clone());
        }
        Ok((path, injected))
    }

    /// Regression keeps the scores; classification takes the row argmax
    /// with ties to the lowest class.
    pub fn decision(&self, scores: &ScoreMatrix) -> Decision {
        match self.task {
            Task::Regression => Decision::Values(scores.index_axis(Axis(1), 0).to_owned()),
            Task::Classification => Decision::Classes(argmax_rows(scores.view())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: EnsembleModel = serde_json::from_str(text)?;
        if model
            .rounds
            .iter()
            .any(|r| r.weights.len() != model.n_orgs() || r.models.len() != model.n_orgs())
        {
            return Err(GalError::invalid(
                "ensemble round does not match its organization count",
            ));
        }
        Ok(model)
    }

    /// CSV with `round, train_loss, test_metric, eta, w_1..w_M`. The test
    /// column is left empty when no metrics are given.
    pub fn history_csv(&self, test_metric: Option<&[f64]>) -> String {
        let mut out = String::from("round,train_loss,test_metric,eta");
        for m in 1..=self.n_orgs() {
            let _ = write!(out, ",w_{m}");
        }
        out.push('\n');
        for (i, h) in self.history.iter().enumerate() {
            let metric = test_metric
                .and_then(|t| t.get(i))
                .map(|v| v.to_string())
                .unwrap_or_default();
            let _ = write!(out, "{},{},{},{}", h.round, h.train_loss, metric, h.eta);
            for w in &h.weights {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }
}

/// `E_N(y)`: the label mean, or class frequencies for classification.
pub fn initialize(y: &Labels) -> Result<Vec<f64>> {
    if y.is_empty() {
        return Err(GalError::invalid("no observations to initialize from"));
    }
    let m = y.as_matrix();
    Ok(m.mean_axis(Axis(0))
        .unwrap_or_else(|| unreachable!())
        .to_vec())
}
