//! Config-driven multi-trial experiments and their reports.

mod config;

pub use config::{
    DatasetSection, DatasetSpec, Experiment, ExperimentConfig, GalSection, PartitionSection,
    PrivacySection, RunSection, SplitSection, TransportSection, TransportSpec,
};

use std::fmt::Write as _;
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::baselines::{alone_setup, joint_setup, run_late, uniform_config, RunKind};
use crate::data::{
    load_csv, make_blobs, make_linear_classification, make_linear_regression, partition_features,
    train_test_split, views, Dataset, VerticalPartition,
};
use crate::error::Result;
use crate::gal::{build_nodes, run_with_transport, GalConfig, GalRun};
use crate::losses::ScoreMatrix;
use crate::metrics::{evaluate, format_mean_stderr, mean_stderr, Metric};
use crate::privacy::InjectionCounts;
use crate::protocol::{
    spawn_local_daemons, CommLedger, InProcessTransport, OrgNode, TcpTransport, Transport,
};

/// Everything one trial needs, derived from the experiment and the trial
/// seed alone.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub trial: usize,
    pub seed: u64,
    pub train: Dataset,
    pub test: Dataset,
    /// Partition and configuration of the system actually run (already
    /// reduced for Alone and Joint).
    pub partition: VerticalPartition,
    pub config: GalConfig,
}

impl Experiment {
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    pub fn load_dataset(&self, seed: u64) -> Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Csv { path, label, task } => load_csv(path, label, *task),
            DatasetSpec::Blobs {
                n,
                d,
                k,
                cluster_std,
                seed: s,
            } => make_blobs(*n, *d, *k, *cluster_std, s.unwrap_or(seed)),
            DatasetSpec::LinearRegression {
                n,
                d,
                noise,
                seed: s,
            } => make_linear_regression(*n, *d, *noise, s.unwrap_or(seed)),
            DatasetSpec::LinearClassification {
                n,
                d,
                noise,
                seed: s,
            } => make_linear_classification(*n, *d, *noise, s.unwrap_or(seed)),
        }
    }

    pub fn prepare_trial(&self, trial: usize) -> Result<TrialData> {
        let seed = self.trial_seed(trial);
        let data = self.load_dataset(seed)?;
        let (train, test) = train_test_split(&data, self.train_fraction, seed)?;
        let (train, test) = if self.standardize {
            train.standardize_pair(&test)
        } else {
            (train, test)
        };
        let full = partition_features(
            train.n_features(),
            self.n_orgs,
            self.partition_seed.unwrap_or(seed),
            &self.strategy,
        )?;
        let mut config = self.gal.clone();
        config.seed = seed;
        let (partition, config) = match self.kind {
            RunKind::Gal | RunKind::Late => (full, config),
            RunKind::GalUniform => (full, uniform_config(&config)),
            RunKind::Alone => alone_setup(&full, &config)?,
            RunKind::Joint => joint_setup(train.n_features(), &config)?,
        };
        Ok(TrialData {
            trial,
            seed,
            train,
            test,
            partition,
            config,
        })
    }

    /// Organization nodes of one trial, holding train and test views.
    pub fn trial_nodes(&self, data: &TrialData) -> Result<Vec<OrgNode>> {
        build_nodes(&data.train, Some(&data.test), &data.partition, &data.config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Test metric at report scale (accuracy in percent).
    pub test_metric: f64,
    pub final_train_loss: f64,
    pub rounds: usize,
    pub ledger: CommLedger,
    pub prediction_ledger: CommLedger,
    pub injections: InjectionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub dataset: String,
    pub kind: RunKind,
    pub metric: Metric,
    pub n_orgs: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub trials: Vec<TrialResult>,
    pub mean: f64,
    pub stderr: f64,
    /// `mean(stderr)` at table precision.
    pub summary: String,
}

impl ResultReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset  {}", self.dataset);
        let _ = writeln!(s, "kind     {}", self.kind);
        let _ = writeln!(s, "orgs     {}", self.n_orgs);
        let _ = writeln!(s, "metric   {}", self.metric);
        let _ = writeln!(s, "trials   {}", self.n_trials);
        let _ = writeln!(s);
        let _ = writeln!(s, "trial  seed  rounds  train_loss  test_{}", self.metric);
        let d = self.metric.decimals() + 2;
        for t in &self.trials {
            let _ = writeln!(
                s,
                "{:>5}  {:>4}  {:>6}  {:>10.4}  {:.d$}",
                t.trial, t.seed, t.rounds, t.final_train_loss, t.test_metric
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{} {}", self.metric, self.summary);
        s
    }
}

/// Outcome of one trial with its artifacts as `(file name, contents)`.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub artifacts: Vec<(String, String)>,
}

fn metric_at_scale(metric: Metric, y: &crate::data::Labels, scores: &ScoreMatrix) -> Result<f64> {
    Ok(evaluate(metric, y, scores)? * metric.report_scale())
}

impl Experiment {
    pub fn run_trial(&self, trial: usize) -> Result<TrialOutcome> {
        let data = self.prepare_trial(trial)?;
        match self.kind {
            RunKind::Late => self.run_late_trial(&data),
            _ => self.run_gal_trial(&data),
        }
    }

    fn run_gal_trial(&self, data: &TrialData) -> Result<TrialOutcome> {
        let nodes = self.trial_nodes(data)?;
        let n_star = data.test.n_rows();
        let y = data.train.labels();
        let (run, path, prediction_ledger, pred_injected) = match (&self.transport, nodes.len()) {
            (TransportSpec::Tcp { timeout, addresses }, m) if m > 1 => {
                let mut nodes = nodes;
                let local = nodes.remove(0);
                let (remotes, daemons) = if addresses.is_empty() {
                    let daemons = spawn_local_daemons(nodes)?;
                    (
                        daemons.iter().map(|d| (d.org, d.addr)).collect::<Vec<_>>(),
                        daemons,
                    )
                } else {
                    (
                        addresses
                            .iter()
                            .enumerate()
                            .map(|(i, a)| (i + 2, *a))
                            .collect(),
                        Vec::new(),
                    )
                };
                let external = daemons.is_empty();
                let mut t = TcpTransport::connect(local, &remotes, *timeout)?;
                let outcome = drive(y, &data.config, &mut t, n_star);
                // External daemons serve one session per trial; closing the
                // connection ends the session, a stop ends the daemon.
                let last = data.trial + 1 == self.n_trials;
                let stopped = match (&outcome, external && !last) {
                    (Ok(_), true) => Ok(()),
                    (Ok(_), false) => t.shutdown("done"),
                    (Err(_), _) => t.shutdown("aborted"),
                };
                for d in daemons {
                    d.join()?;
                }
                let out = outcome?;
                stopped?;
                out
            }
            _ => {
                let mut t = InProcessTransport::new(nodes)?;
                drive(y, &data.config, &mut t, n_star)?
            }
        };
        let per_round: Vec<f64> = path[1..]
            .iter()
            .map(|s| metric_at_scale(self.metric, data.test.labels(), s))
            .collect::<Result<_>>()?;
        let test_metric = metric_at_scale(
            self.metric,
            data.test.labels(),
            path.last().unwrap_or(&path[0]),
        )?;
        let mut injections = run.injections;
        injections.prediction += pred_injected;
        let result = TrialResult {
            trial: data.trial,
            seed: data.seed,
            test_metric,
            final_train_loss: run
                .ensemble
                .history
                .last()
                .map_or(run.ensemble.initial_train_loss, |h| h.train_loss),
            rounds: run.ensemble.rounds.len(),
            ledger: run.ledger,
            prediction_ledger,
            injections,
        };
        let artifacts = vec![
            (
                format!("trial_{}_history.csv", data.trial),
                run.ensemble.history_csv(Some(&per_round)),
            ),
            (
                format!("trial_{}_ensemble.json", data.trial),
                run.ensemble.to_json()?,
            ),
        ];
        Ok(TrialOutcome { result, artifacts })
    }

    fn run_late_trial(&self, data: &TrialData) -> Result<TrialOutcome> {
        let late = run_late(&data.train, &data.partition, &data.config)?;
        let test_views = views(&data.test, &data.partition)?;
        let cols: Vec<ArrayView2<'_, f64>> = test_views.iter().map(|v| v.columns()).collect();
        let scores = late.model.predict(&cols)?;
        let final_train_loss = crate::losses::loss_value(
            data.config.overarching_loss,
            data.train.labels(),
            late.train_scores.view(),
        )?;
        let mut artifacts = Vec::new();
        for (i, member) in late.members.iter().enumerate() {
            artifacts.push((
                format!("trial_{}_member_{}_history.csv", data.trial, i + 1),
                member.ensemble.history_csv(None),
            ));
        }
        artifacts.push((
            format!("trial_{}_ensemble.json", data.trial),
            serde_json::to_string_pretty(&late.model)?,
        ));
        Ok(TrialOutcome {
            result: TrialResult {
                trial: data.trial,
                seed: data.seed,
                test_metric: metric_at_scale(self.metric, data.test.labels(), &scores)?,
                final_train_loss,
                rounds: late
                    .members
                    .iter()
                    .map(|m| m.ensemble.rounds.len())
                    .max()
                    .unwrap_or(0),
                ledger: CommLedger::default(),
                prediction_ledger: CommLedger::default(),
                injections: InjectionCounts::default(),
            },
            artifacts,
        })
    }

    /// Runs every trial, then aggregates. Writes the report and per-trial
    /// artifacts when `out` is given.
    pub fn run(&self, out: Option<&Path>) -> Result<ResultReport> {
        let mut outcomes = Vec::with_capacity(self.n_trials);
        for trial in 0..self.n_trials {
            outcomes.push(self.run_trial(trial)?);
        }
        let values: Vec<f64> = outcomes.iter().map(|o| o.result.test_metric).collect();
        let (mean, stderr) = mean_stderr(&values);
        let report = ResultReport {
            dataset: self.name.clone(),
            kind: self.kind,
            metric: self.metric,
            n_orgs: self.n_orgs,
            n_trials: self.n_trials,
            base_seed: self.base_seed,
            trials: outcomes.iter().map(|o| o.result.clone()).collect(),
            mean,
            stderr,
            summary: format_mean_stderr(mean, stderr, self.metric.decimals()),
        };
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            for o in &outcomes {
                for (name, body) in &o.artifacts {
                    std::fs::write(dir.join(name), body)?;
                }
            }
            std::fs::write(
                dir.join("report.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            std::fs::write(dir.join("report.txt"), report.to_text())?;
        }
        Ok(report)
    }
}

/// Learning then prediction over one transport.
fn drive(
    y: &crate::data::Labels,
    config: &GalConfig,
    transport: &mut dyn Transport,
    n_star: usize,
) -> Result<(GalRun, Vec<ScoreMatrix>, CommLedger, usize)> {
    let run = run_with_transport(y, config, transport)?;
    let (path, injected) = run.ensemble.predict_path(transport, n_star)?;
    Ok((run, path, transport.prediction_ledger(), injected))
}

/// Validates `config` and runs it; `out` overrides `run.out`.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<ResultReport> {
    let exp = config.validate()?;
    let dir = out.map(Path::to_path_buf).or_else(|| exp.out.clone());
    exp.run(dir.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_config(kind: &str, transport: &str) -> ExperimentConfig {
        let text = format!(
            r#"
[dataset]
source = "blobs"
n = 60
d = 6
k = 3
cluster_std = 1.0
[partition]
n_orgs = 3
[run]
kind = "{kind}"
n_trials = 2
seed = 5
[transport]
kind = "{transport}"
timeout_secs = 20
"#
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn every_kind_runs() {
        for kind in ["gal", "gal_uniform", "alone", "joint", "late"] {
            let report = run_experiment(&blob_config(kind, "in_process"), None).unwrap();
            assert_eq!(report.trials.len(), 2);
            assert!(
                report.mean > 0.0 && report.mean <= 100.0,
                "{kind}: {}",
                report.mean
            );
        }
    }

    #[test]
    fn tcp_report_matches_in_process() {
        let a = run_experiment(&blob_config("gal", "in_process"), None).unwrap();
        let b = run_experiment(&blob_config("gal", "tcp"), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_runs_write_identical_files() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let cfg = blob_config("gal", "in_process");
        run_experiment(&cfg, Some(d1.path())).unwrap();
        run_experiment(&cfg, Some(d2.path())).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(d1.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(names.len() >= 6);
        for n in names {
            assert_eq!(
                std::fs::read(d1.path().join(&n)).unwrap(),
                std::fs::read(d2.path().join(&n)).unwrap()
            );
        }
    }

    #[test]
    fn single_trial_has_zero_stderr() {
        let mut cfg = blob_config("gal", "in_process");
        cfg.run.n_trials = 1;
        let r = run_experiment(&cfg, None).unwrap();
        assert_eq!(r.stderr, 0.0);
        assert!(r.summary.ends_with("(0.0)"));
    }
}
