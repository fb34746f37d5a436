use std::collections::BTreeMap;

use crate::data::FeatureView;
use crate::error::{GalError, Result};
use crate::learners::{fit, LearnerSpec, LocalModel};
use crate::losses::{LocalLoss, ScoreMatrix};

use super::message::{FittedPredictions, Message, PredictResponse, ResidualBroadcast};

/// The state one organization keeps: its feature slices, learner, local
/// loss, and the models it fitted so far. It never sees labels, weights or
/// learning rates.
#[derive(Debug, Clone)]
pub struct OrgNode {
    org: usize,
    train: FeatureView,
    test: Option<FeatureView>,
    spec: LearnerSpec,
    loss: LocalLoss,
    models: BTreeMap<usize, LocalModel>,
    last_residual: Option<(usize, ScoreMatrix)>,
}

impl OrgNode {
    pub fn new(
        train: FeatureView,
        test: Option<FeatureView>,
        spec: LearnerSpec,
        loss: LocalLoss,
    ) -> Result<Self> {
        spec.validate()?;
        if let Some(t) = &test {
            if t.width() != train.width() {
                return Err(GalError::shape(format!(
                    "org {}: test view has {} columns, train view {}",
                    train.org(),
                    t.width(),
                    train.width()
                )));
            }
        }
        Ok(OrgNode {
            org: train.org(),
            train,
            test,
            spec,
            loss,
            models: BTreeMap::new(),
            last_residual: None,
        })
    }

    pub fn org(&self) -> usize {
        self.org
    }

    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn model(&self, round: usize) -> Option<&LocalModel> {
        self.models.get(&round)
    }

    pub fn fit_round(&mut self, msg: &ResidualBroadcast) -> Result<FittedPredictions> {
        let r = msg.to_matrix()?;
        if r.nrows() != self.train.n_rows() {
            return Err(GalError::shape(format!(
                "org {}: residual has {} rows, view has {}",
                self.org,
                r.nrows(),
                self.train.n_rows()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(GalError::Numeric(format!(
                "org {}: non-finite residual in round {}",
                self.org, msg.round
            )));
        }
        let out = self.fit_with(msg.round, &r, self.loss)?;
        self.last_residual = Some((msg.round, r));
        Ok(out)
    }

    fn fit_with(
        &mut self,
        round: usize,
        r: &ScoreMatrix,
        loss: LocalLoss,
    ) -> Result<FittedPredictions> {
        let model = fit(&self.spec, self.train.columns(), r.view(), loss)?;
        let preds = model.predict(self.train.columns())?;
        self.models.insert(round, model);
        Ok(FittedPredictions::from_matrix(round, self.org, &preds))
    }

    pub fn refit(&mut self, round: usize, local_loss: &str) -> Result<FittedPredictions> {
        let loss = if local_loss.is_empty() {
            self.loss
        } else {
            local_loss.parse()?
        };
        let r = match &self.last_residual {
            Some((t, r)) if *t == round => r.clone(),
            _ => {
                return Err(GalError::protocol(format!(
                    "org {}: no residual stored for round {round}",
                    self.org
                )))
            }
        };
        self.fit_with(round, &r, loss)
    }

    pub fn predict(&self, model_rounds: &[usize], n_star: usize) -> Result<PredictResponse> {
        let test = self.test.as_ref().ok_or_else(|| {
            GalError::invalid(format!(
                "org {} holds no prediction-stage features",
                self.org
            ))
        })?;
        if test.n_rows() != n_star {
            return Err(GalError::shape(format!(
                "org {}: asked for {n_star} rows, holds {}",
                self.org,
                test.n_rows()
            )));
        }
        let mut data = Vec::with_capacity(model_rounds.len());
        let mut k = 0;
        for &t in model_rounds {
            let model = self.models.get(&t).ok_or_else(|| {
                GalError::protocol(format!("org {} has no model for round {t}", self.org))
            })?;
            let p = model.predict(test.columns())?;
            k = p.ncols();
            data.push(p.iter().copied().collect());
        }
        Ok(PredictResponse {
            org: self.org,
            n: n_star,
            k,
            rounds: model_rounds.to_vec(),
            data,
        })
    }

    /// Reply to one incoming message. `Stop` yields `None`.
    pub fn handle(&mut self, msg: &Message) -> Result<Option<Message>> {
        match msg {
            Message::ResidualBroadcast(b) => {
                Ok(Some(Message::FittedPredictions(self.fit_round(b)?)))
            }
            Message::FitRequest { round, local_loss } => Ok(Some(Message::FittedPredictions(
                self.refit(*round, local_loss)?,
            ))),
            Message::PredictRequest {
                model_rounds,
                n_star,
            } => Ok(Some(Message::PredictResponse(
                self.predict(model_rounds, *n_star)?,
            ))),
            Message::Stop { .. } => Ok(None),
            other => Err(GalError::protocol(format!(
                "organization cannot handle {}",
                serde_json::to_value(other)
                    .ok()
                    .and_then(|v| v["type"].as_str().map(String::from))
                    .unwrap_or_default()
            ))),
        }
    }
}
