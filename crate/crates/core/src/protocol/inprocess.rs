use std::thread;

use crate::error::{GalError, Result};
use crate::learners::LocalModel;

use super::message::{FittedPredictions, PredictResponse, ResidualBroadcast};
use super::{collect_round, CommLedger, OrgNode, Transport};

/// Every organization lives in this process. Fits of one broadcast run on
/// parallel threads.
#[derive(Debug)]
pub struct InProcessTransport {
    nodes: Vec<OrgNode>,
    pending: Vec<FittedPredictions>,
    ledger: CommLedger,
    prediction_ledger: CommLedger,
}

impl InProcessTransport {
    /// `nodes[i]` must be organization `i + 1`.
    pub fn new(nodes: Vec<OrgNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(GalError::invalid("at least one organization is required"));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.org() != i + 1 {
                return Err(GalError::invalid(format!(
                    "node {} is labelled org {}",
                    i + 1,
                    n.org()
                )));
            }
        }
        Ok(InProcessTransport {
            nodes,
            pending: Vec::new(),
            ledger: CommLedger::default(),
            prediction_ledger: CommLedger::default(),
        })
    }

    pub fn nodes(&self) -> &[OrgNode] {
        &self.nodes
    }
}

impl Transport for InProcessTransport {
    fn n_orgs(&self) -> usize {
        self.nodes.len()
    }

    fn submit_local(&mut self, msg: &ResidualBroadcast) -> Result<()> {
        let reply = self.nodes[0].fit_round(msg)?;
        self.pending.push(reply);
        Ok(())
    }

    fn broadcast(&mut self, msg: &ResidualBroadcast, recipients: &[usize]) -> Result<()> {
        if recipients.is_empty() {
            return Err(GalError::invalid("broadcast needs at least one recipient"));
        }
        let m = self.nodes.len();
        if let Some(bad) = recipients.iter().find(|&&r| r < 2 || r > m) {
            return Err(GalError::invalid(format!(
                "recipient {bad} is not a remote organization"
            )));
        }
        let targets: Vec<&mut OrgNode> = self
            .nodes
            .iter_mut()
            .filter(|n| recipients.contains(&n.org()))
            .collect();
        let replies: Vec<Result<FittedPredictions>> = thread::scope(|s| {
            let handles: Vec<_> = targets
                .into_iter()
                .map(|node| s.spawn(move || node.fit_round(msg)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| {
                        Err(GalError::Numeric("organization fit panicked".into()))
                    })
                })
                .collect()
        });
        self.ledger.record_broadcast(msg.n, msg.k, recipients.len());
        for r in replies {
            self.pending.push(r?);
        }
        Ok(())
    }

    fn gather(&mut self, round: usize) -> Result<Vec<FittedPredictions>> {
        let arrivals = std::mem::take(&mut self.pending);
        let out = collect_round(round, self.nodes.len(), arrivals)?;
        self.ledger
            .record_gather(out[0].n, out[0].k, self.nodes.len() - 1);
        Ok(out)
    }

    fn predict(&mut self, model_rounds: &[usize], n_star: usize) -> Result<Vec<PredictResponse>> {
        let remote = self.nodes.len() - 1;
        self.prediction_ledger.record_predict_request(remote);
        let out: Vec<PredictResponse> = self
            .nodes
            .iter()
            .map(|n| n.predict(model_rounds, n_star))
            .collect::<Result<_>>()?;
        self.prediction_ledger.record_predict_response(
            n_star,
            out[0].k,
            model_rounds.len(),
            remote,
        );
        Ok(out)
    }

    fn ledger(&self) -> CommLedger {
        self.ledger
    }

    fn prediction_ledger(&self) -> CommLedger {
        self.prediction_ledger
    }

    fn local_model(&self, org: usize, round: usize) -> Option<LocalModel> {
        self.nodes.get(org.checked_sub(1)?)?.model(round).cloned()
    }

    fn shutdown(&mut self, _reason: &str) -> Result<()> {
        Ok(())
    }
}
