//! Message vocabulary of the assistance protocol, transports, and
//! communication accounting.
//!
//! Organization 1 is Alice. She holds the labels and never sends her own
//! residual or predictions over the wire; every other organization is reached
//! through a [`Transport`].

mod inprocess;
mod ledger;
mod message;
mod org;
mod tcp;

pub use inprocess::InProcessTransport;
pub use ledger::{CommLedger, BYTES_PER_REAL};
pub use message::{
    decode_jsonl, encode_jsonl, FittedPredictions, Message, PredictResponse, ResidualBroadcast,
};
pub use org::OrgNode;
pub use tcp::{
    serve_org, serve_sessions, spawn_local_daemons, DaemonHandle, ServeOutcome, TcpTransport,
};

use crate::error::{GalError, Result};
use crate::learners::LocalModel;

/// Default gather timeout for network transports.
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

/// Alice's side of the protocol.
pub trait Transport {
    /// Number of organizations including Alice.
    fn n_orgs(&self) -> usize;

    /// Hands Alice's own organization the round's residual. No wire cost.
    fn submit_local(&mut self, msg: &ResidualBroadcast) -> Result<()>;

    /// Sends identical copies of `msg` to every listed organization.
    fn broadcast(&mut self, msg: &ResidualBroadcast, recipients: &[usize]) -> Result<()>;

    /// Waits for every organization's fitted predictions for `round`,
    /// returned in organization order.
    fn gather(&mut self, round: usize) -> Result<Vec<FittedPredictions>>;

    /// Prediction stage: every organization evaluates its models for
    /// `model_rounds` on its `n_star` held-out rows.
    fn predict(&mut self, model_rounds: &[usize], n_star: usize) -> Result<Vec<PredictResponse>>;

    /// Learning-stage traffic.
    fn ledger(&self) -> CommLedger;

    /// Prediction-stage traffic.
    fn prediction_ledger(&self) -> CommLedger;

    /// A fitted model when this transport can see it; remote models stay
    /// private to their owner.
    fn local_model(&self, org: usize, round: usize) -> Option<LocalModel>;

    /// Ends the session with every remote organization.
    fn shutdown(&mut self, reason: &str) -> Result<()>;
}

/// Orders one round of fitted predictions by organization and rejects
/// duplicates, strays from other rounds, and missing organizations.
pub fn collect_round(
    round: usize,
    n_orgs: usize,
    arrivals: impl IntoIterator<Item = FittedPredictions>,
) -> Result<Vec<FittedPredictions>> {
    let mut slots: Vec<Option<FittedPredictions>> = vec![None; n_orgs];
    for msg in arrivals {
        if msg.round != round {
            return Err(GalError::protocol(format!(
                "org {} answered round {} during round {round}",
                msg.org, msg.round
            )));
        }
        if msg.org == 0 || msg.org > n_orgs {
            return Err(GalError::protocol(format!("unknown org {}", msg.org)));
        }
        let slot = &mut slots[msg.org - 1];
        if slot.is_some() {
            return Err(GalError::protocol(format!(
                "duplicate fitted_predictions for round {round}, org {}",
                msg.org
            )));
        }
        *slot = Some(msg);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                GalError::protocol(format!("org {} sent nothing for round {round}", i + 1))
            })
        })
        .collect()
}
