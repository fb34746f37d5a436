use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::error::{GalError, Result};
use crate::learners::LocalModel;

use super::message::{
    decode_jsonl, encode_jsonl, FittedPredictions, Message, PredictResponse, ResidualBroadcast,
};
use super::{collect_round, CommLedger, OrgNode, Transport};

struct Connection {
    org: usize,
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    outstanding: usize,
}

impl Connection {
    fn send(&mut self, msg: &Message) -> Result<()> {
        let line = encode_jsonl(msg)?;
        self.writer
            .write_all(&line)
            .and_then(|_| self.writer.flush())
            .map_err(|e| transport(self.org, format!("send failed: {e}")))
    }

    fn receive(&mut self) -> Result<Message> {
        let mut line = Vec::new();
        match self.reader.read_until(b'\n', &mut line) {
            Ok(0) => Err(transport(self.org, "connection closed")),
            Ok(_) => match decode_jsonl(&line)? {
                Message::Stop { reason } => Err(GalError::protocol(format!(
                    "org {} stopped: {reason}",
                    self.org
                ))),
                msg => Ok(msg),
            },
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                Err(transport(self.org, "timed out waiting for reply"))
            }
            Err(e) => Err(transport(self.org, format!("receive failed: {e}"))),
        }
    }
}

fn transport(org: usize, message: impl Into<String>) -> GalError {
    GalError::Transport {
        org,
        message: message.into(),
    }
}

/// Alice's organization runs locally; every other organization is a daemon
/// reached over one TCP connection carrying newline-delimited JSON.
pub struct TcpTransport {
    local: OrgNode,
    conns: Vec<Connection>,
    local_pending: Option<FittedPredictions>,
    ledger: CommLedger,
    prediction_ledger: CommLedger,
}

impl TcpTransport {
    /// `remotes` lists `(org, address)` for organizations `2..=M`.
    pub fn connect(
        local: OrgNode,
        remotes: &[(usize, SocketAddr)],
        timeout: Duration,
    ) -> Result<Self> {
        if local.org() != 1 {
            return Err(GalError::invalid("the local node must be organization 1"));
        }
        let mut orgs: Vec<usize> = remotes.iter().map(|r| r.0).collect();
        orgs.sort_unstable();
        if orgs != (2..=remotes.len() + 1).collect::<Vec<_>>() {
            return Err(GalError::invalid(format!(
                "remote orgs {orgs:?} must be exactly 2..={}",
                remotes.len() + 1
            )));
        }
        let mut conns = Vec::with_capacity(remotes.len());
        for &org in &orgs {
            let addr = remotes
                .iter()
                .find(|r| r.0 == org)
                .map(|r| r.1)
                .unwrap_or_else(|| unreachable!());
            let stream = TcpStream::connect_timeout(&addr, timeout)
                .map_err(|e| transport(org, format!("cannot reach {addr}: {e}")))?;
            stream
                .set_read_timeout(Some(timeout))
                .and_then(|_| stream.set_nodelay(true))
                .map_err(|e| transport(org, e.to_string()))?;
            let writer = stream
                .try_clone()
                .map_err(|e| transport(org, e.to_string()))?;
            conns.push(Connection {
                org,
                reader: BufReader::new(stream),
                writer,
                outstanding: 0,
            });
        }
        Ok(TcpTransport {
            local,
            conns,
            local_pending: None,
            ledger: CommLedger::default(),
            prediction_ledger: CommLedger::default(),
        })
    }

    /// Reads one message from every connection concurrently.
    fn receive_all(
        &mut self,
        filter: impl Fn(&Connection) -> bool + Sync,
    ) -> Result<Vec<(usize, Message)>> {
        let results: Vec<Result<Vec<(usize, Message)>>> = thread::scope(|s| {
            let handles: Vec<_> = self
                .conns
                .iter_mut()
                .filter(|c| filter(c))
                .map(|c| {
                    s.spawn(move || {
                        let mut got = Vec::new();
                        while c.outstanding > 0 {
                            got.push((c.org, c.receive()?));
                            c.outstanding -= 1;
                        }
                        Ok(got)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(GalError::protocol("reader thread panicked")))
                })
                .collect()
        });
        let mut out = Vec::new();
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

impl Transport for TcpTransport {
    fn n_orgs(&self) -> usize {
        self.conns.len() + 1
    }

    fn submit_local(&mut self, msg: &ResidualBroadcast) -> Result<()> {
        if self.local_pending.is_some() {
            return Err(GalError::protocol("duplicate local fit"));
        }
        self.local_pending = Some(self.local.fit_round(msg)?);
        Ok(())
    }

    fn broadcast(&mut self, msg: &ResidualBroadcast, recipients: &[usize]) -> Result<()> {
        if recipients.is_empty() {
            return Err(GalError::invalid("broadcast needs at least one recipient"));
        }
        let m = self.n_orgs();
        if let Some(bad) = recipients.iter().find(|&&r| r < 2 || r > m) {
            return Err(GalError::invalid(format!(
                "recipient {bad} is not a remote organization"
            )));
        }
        let wire = Message::ResidualBroadcast(msg.clone());
        for c in self
            .conns
            .iter_mut()
            .filter(|c| recipients.contains(&c.org))
        {
            c.send(&wire)?;
            c.outstanding += 1;
        }
        self.ledger.record_broadcast(msg.n, msg.k, recipients.len());
        Ok(())
    }

    fn gather(&mut self, round: usize) -> Result<Vec<FittedPredictions>> {
        let mut arrivals: Vec<FittedPredictions> = self.local_pending.take().into_iter().collect();
        for (org, msg) in self.receive_all(|c| c.outstanding > 0)? {
            match msg {
                Message::FittedPredictions(fp) if fp.org == org => arrivals.push(fp),
                Message::FittedPredictions(fp) => {
                    return Err(GalError::protocol(format!(
                        "connection of org {org} answered as org {}",
                        fp.org
                    )))
                }
                _ => {
                    return Err(GalError::protocol(format!(
                        "org {org} sent an unexpected message"
                    )))
                }
            }
        }
        let out = collect_round(round, self.n_orgs(), arrivals)?;
        self.ledger
            .record_gather(out[0].n, out[0].k, self.conns.len());
        Ok(out)
    }

    fn predict(&mut self, model_rounds: &[usize], n_star: usize) -> Result<Vec<PredictResponse>> {
        let req = Message::PredictRequest {
            model_rounds: model_rounds.to_vec(),
            n_star,
        };
        for c in &mut self.conns {
            c.send(&req)?;
            c.outstanding += 1;
        }
        self.prediction_ledger
            .record_predict_request(self.conns.len());
        let mut out = vec![self.local.predict(model_rounds, n_star)?];
        for (org, msg) in self.receive_all(|c| c.outstanding > 0)? {
            match msg {
                Message::PredictResponse(p)
                    if p.org == org && p.rounds == model_rounds && p.n == n_star =>
                {
                    out.push(p)
                }
                _ => {
                    return Err(GalError::protocol(format!(
                        "org {org} sent a mismatched predict_response"
                    )))
                }
            }
        }
        out.sort_by_key(|p| p.org);
        self.prediction_ledger.record_predict_response(
            n_star,
            out[0].k,
            model_rounds.len(),
            self.conns.len(),
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
        (org == 1)
            .then(|| self.local.model(round).cloned())
            .flatten()
    }

    fn shutdown(&mut self, reason: &str) -> Result<()> {
        let stop = Message::Stop {
            reason: reason.into(),
        };
        let mut first_err = None;
        for c in &mut self.conns {
            if let Err(e) = c.send(&stop) {
                first_err.get_or_insert(e);
            }
        }
        first_err.map_or(Ok(()), Err)
    }
}

/// What a daemon did before it was told to stop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeOutcome {
    pub connections: usize,
    pub messages: usize,
    pub protocol_errors: usize,
}

/// Serves one organization until a `stop` message arrives. Each accepted
/// connection is a fresh session with an unfitted copy of `node`. A
/// malformed or unanswerable line gets a `stop` reply describing the error
/// and the connection is closed.
pub fn serve_org(listener: TcpListener, node: OrgNode) -> Result<ServeOutcome> {
    serve_sessions(listener, |_| Ok(node.clone()))
}

/// [`serve_org`] with the node of each session built by `session`, called
/// with the 0-based session index.
pub fn serve_sessions(
    listener: TcpListener,
    mut session: impl FnMut(usize) -> Result<OrgNode>,
) -> Result<ServeOutcome> {
    let mut outcome = ServeOutcome::default();
    for stream in listener.incoming() {
        let stream = stream?;
        let mut node = session(outcome.connections)?;
        outcome.connections += 1;
        if serve_connection(stream, &mut node, &mut outcome)? {
            return Ok(outcome);
        }
    }
    Ok(outcome)
}

/// Returns `true` when the peer asked the daemon to stop.
fn serve_connection(
    stream: TcpStream,
    node: &mut OrgNode,
    outcome: &mut ServeOutcome,
) -> Result<bool> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            return Ok(false);
        }
        outcome.messages += 1;
        let reply = decode_jsonl(&line).and_then(|msg| node.handle(&msg));
        match reply {
            Ok(Some(msg)) => {
                if writer.write_all(&encode_jsonl(&msg)?).is_err() {
                    return Ok(false);
                }
            }
            Ok(None) => return Ok(true),
            Err(e) => {
                outcome.protocol_errors += 1;
                let stop = Message::Stop {
                    reason: format!("protocol error: {e}"),
                };
                let _ = writer.write_all(&encode_jsonl(&stop)?);
                return Ok(false);
            }
        }
    }
}

/// A daemon thread serving one organization on a loopback port.
pub struct DaemonHandle {
    pub org: usize,
    pub addr: SocketAddr,
    thread: JoinHandle<Result<ServeOutcome>>,
}

impl DaemonHandle {
    pub fn join(self) -> Result<ServeOutcome> {
        self.thread
            .join()
            .unwrap_or_else(|_| Err(transport(self.org, "daemon thread panicked")))
    }
}

/// Binds each node to `127.0.0.1:0` and serves it on its own thread.
pub fn spawn_local_daemons(nodes: Vec<OrgNode>) -> Result<Vec<DaemonHandle>> {
    nodes
        .into_iter()
        .map(|node| {
            let org = node.org();
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let thread = thread::Builder::new()
                .name(format!("org-{org}"))
                .spawn(move || serve_org(listener, node))?;
            Ok(DaemonHandle { org, addr, thread })
        })
        .collect()
}
