use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};
use crate::losses::ScoreMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualBroadcast {
    pub round: usize,
    pub n: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl ResidualBroadcast {
    pub fn from_matrix(round: usize, r: &ScoreMatrix) -> Self {
        ResidualBroadcast {
            round,
            n: r.nrows(),
            k: r.ncols(),
            data: r.iter().copied().collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ScoreMatrix> {
        to_matrix(self.n, self.k, &self.data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPredictions {
    pub round: usize,
    pub org: usize,
    pub n: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl FittedPredictions {
    pub fn from_matrix(round: usize, org: usize, p: &ScoreMatrix) -> Self {
        FittedPredictions {
            round,
            org,
            n: p.nrows(),
            k: p.ncols(),
            data: p.iter().copied().collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ScoreMatrix> {
        to_matrix(self.n, self.k, &self.data)
    }
}

/// One `n × k` block per requested round, in request order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub org: usize,
    pub n: usize,
    pub k: usize,
    pub rounds: Vec<usize>,
    pub data: Vec<Vec<f64>>,
}

impl PredictResponse {
    pub fn matrices(&self) -> Result<Vec<ScoreMatrix>> {
        self.data
            .iter()
            .map(|d| to_matrix(self.n, self.k, d))
            .collect()
    }
}

fn to_matrix(n: usize, k: usize, data: &[f64]) -> Result<ScoreMatrix> {
    Array2::from_shape_vec((n, k), data.to_vec())
        .map_err(|e| GalError::protocol(format!("bad payload shape: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    ResidualBroadcast(ResidualBroadcast),
    /// Asks an organization to refit the stored residual of `round`,
    /// optionally under a different local loss (`"lq:<q>"`).
    FitRequest {
        round: usize,
        local_loss: String,
    },
    FittedPredictions(FittedPredictions),
    PredictRequest {
        model_rounds: Vec<usize>,
        n_star: usize,
    },
    PredictResponse(PredictResponse),
    Stop {
        reason: String,
    },
}

impl Message {
    pub fn validate(&self) -> Result<()> {
        let payload = |n: usize, k: usize, len: usize| {
            if n.checked_mul(k) != Some(len) {
                Err(GalError::protocol(format!(
                    "data length {len} does not match n·k = {n}·{k}"
                )))
            } else {
                Ok(())
            }
        };
        let round = |r: usize| {
            if r == 0 {
                Err(GalError::protocol("round must be >= 1"))
            } else {
                Ok(())
            }
        };
        let org = |m: usize| {
            if m == 0 {
                Err(GalError::protocol("org must be >= 1"))
            } else {
                Ok(())
            }
        };
        match self {
            Message::ResidualBroadcast(m) => {
                round(m.round)?;
                payload(m.n, m.k, m.data.len())
            }
            Message::FitRequest { round: r, .. } => round(*r),
            Message::FittedPredictions(m) => {
                round(m.round)?;
                org(m.org)?;
                payload(m.n, m.k, m.data.len())
            }
            Message::PredictRequest { model_rounds, .. } => {
                model_rounds.iter().try_for_each(|&r| round(r))
            }
            Message::PredictResponse(m) => {
                org(m.org)?;
                if m.rounds.len() != m.data.len() {
                    return Err(GalError::protocol(format!(
                        "{} rounds but {} data blocks",
                        m.rounds.len(),
                        m.data.len()
                    )));
                }
                m.rounds.iter().try_for_each(|&r| round(r))?;
                m.data.iter().try_for_each(|d| payload(m.n, m.k, d.len()))
            }
            Message::Stop { .. } => Ok(()),
        }
    }
}

/// One JSON object terminated by `'\n'`.
pub fn encode_jsonl(msg: &Message) -> Result<Vec<u8>> {
    let mut line = serde_json::to_vec(msg)?;
    line.push(b'\n');
    Ok(line)
}

pub fn decode_jsonl(line: &[u8]) -> Result<Message> {
    let text = std::str::from_utf8(line)
        .map_err(|e| GalError::protocol(format!("line is not UTF-8: {e}")))?;
    let msg: Message = serde_json::from_str(text.trim_end_matches(['\n', '\r']))
        .map_err(|e| GalError::protocol(format!("malformed message: {e}")))?;
    msg.validate()?;
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schema_instance() {
        let msg = Message::ResidualBroadcast(ResidualBroadcast {
            round: 1,
            n: 1,
            k: 1,
            data: vec![0.5],
        });
        let line = encode_jsonl(&msg).unwrap();
        assert_eq!(
            std::str::from_utf8(&line).unwrap(),
            "{\"type\":\"residual_broadcast\",\"round\":1,\"n\":1,\"k\":1,\"data\":[0.5]}\n"
        );
        assert_eq!(decode_jsonl(&line).unwrap(), msg);
    }

    #[test]
    fn length_mismatch_is_protocol_error() {
        let line = br#"{"type":"residual_broadcast","round":1,"n":1,"k":1,"data":[0.5,1.0]}"#;
        assert!(matches!(decode_jsonl(line), Err(GalError::Protocol(_))));
    }

    #[test]
    fn unknown_type_and_garbage_rejected() {
        assert!(matches!(
            decode_jsonl(br#"{"type":"hello"}"#),
            Err(GalError::Protocol(_))
        ));
        assert!(matches!(
            decode_jsonl(b"{not json"),
            Err(GalError::Protocol(_))
        ));
        assert!(matches!(
            decode_jsonl(br#"{"type":"residual_broadcast","round":0,"n":0,"k":1,"data":[]}"#),
            Err(GalError::Protocol(_))
        ));
    }

    #[test]
    fn other_variants_round_trip() {
        let msgs = [
            Message::FitRequest {
                round: 2,
                local_loss: "lq:1.5".into(),
            },
            Message::PredictRequest {
                model_rounds: vec![1, 2, 3],
                n_star: 7,
            },
            Message::PredictResponse(PredictResponse {
                org: 3,
                n: 1,
                k: 2,
                rounds: vec![1, 2],
                data: vec![vec![0.1, -0.2], vec![1e-300, 3.0]],
            }),
            Message::Stop {
                reason: "done".into(),
            },
        ];
        for m in msgs {
            assert_eq!(decode_jsonl(&encode_jsonl(&m).unwrap()).unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn fitted_predictions_round_trip_exactly(
            round in 1usize..50,
            org in 1usize..9,
            k in 1usize..4,
            raw in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..40),
        ) {
            let n = raw.len() / k;
            prop_assume!(n > 0);
            let data = raw[..n * k].to_vec();
            let msg = Message::FittedPredictions(FittedPredictions { round, org, n, k, data });
            let line = encode_jsonl(&msg).unwrap();
            prop_assert_eq!(line.iter().filter(|&&b| b == b'\n').count(), 1);
            let back = decode_jsonl(&line).unwrap();
            match (&back, &msg) {
                (Message::FittedPredictions(a), Message::FittedPredictions(b)) => {
                    for (x, y) in a.data.iter().zip(&b.data) {
                        prop_assert_eq!(x.to_bits(), y.to_bits());
                    }
                }
                _ => prop_assert!(false),
            }
        }
    }
}
