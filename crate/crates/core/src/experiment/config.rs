use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::baselines::RunKind;
use crate::data::{PartitionStrategy, Task};
use crate::error::{GalError, Result};
use crate::gal::{GalConfig, LineSearchMode, WeightMode, WeightOpt};
use crate::learners::LearnerSpec;
use crate::losses::{LocalLoss, OverarchingLoss};
use crate::metrics::Metric;
use crate::privacy::Channel;
use crate::protocol::DEFAULT_TIMEOUT_SECS;

/// Experiment file as written by the user. Every key except
/// `dataset.source` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub split: SplitSection,
    pub partition: PartitionSection,
    pub run: RunSection,
    pub gal: GalSection,
    pub privacy: PrivacySection,
    pub transport: TransportSection,
    /// Directory relative dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// `csv`, `blobs`, `linear_regression` or `linear_classification`.
    pub source: String,
    pub name: Option<String>,
    pub path: Option<PathBuf>,
    pub label: Option<String>,
    pub task: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub cluster_std: Option<f64>,
    pub noise: Option<f64>,
    /// Generator seed; the trial seed when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
    /// Z-score features with training statistics.
    pub standardize: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_fraction: 0.8,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub n_orgs: usize,
    /// `random`, `contiguous` or `explicit`.
    pub strategy: String,
    /// 0-based columns per organization for `explicit`.
    pub assignments: Vec<Vec<usize>>,
    pub allow_overlap: bool,
    /// Fixed partition seed; the trial seed when absent.
    pub seed: Option<u64>,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection {
            n_orgs: 8,
            strategy: "random".into(),
            assignments: Vec::new(),
            allow_overlap: false,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub kind: String,
    pub n_trials: usize,
    pub seed: u64,
    pub metric: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: "gal".into(),
            n_trials: 4,
            seed: 0,
            metric: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalSection {
    pub t_max: usize,
    pub eta_stop_threshold: f64,
    pub weight_mode: String,
    pub weight_iterations: usize,
    pub weight_step_size: f64,
    /// `bracketing`, `capped` or `fixed`.
    pub line_search: String,
    pub cap_a: f64,
    pub fixed_eta: f64,
    pub loss: Option<String>,
    pub learner: String,
    pub learners: Vec<String>,
    pub local_loss: String,
    pub local_losses: Vec<String>,
    pub alice_local_loss: String,
}

impl Default for GalSection {
    fn default() -> Self {
        GalSection {
            t_max: 10,
            eta_stop_threshold: 1e-3,
            weight_mode: "optimized".into(),
            weight_iterations: WeightOpt::default().iterations,
            weight_step_size: WeightOpt::default().step_size,
            line_search: "bracketing".into(),
            cap_a: 1.0,
            fixed_eta: 1.0,
            loss: None,
            learner: "ridge:1".into(),
            learners: Vec::new(),
            local_loss: "lq:2".into(),
            local_losses: Vec::new(),
            alice_local_loss: "lq:2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySection {
    /// `identity`, `laplace`, `gaussian` or `interval`.
    pub residual_channel: String,
    /// `identity` or `gaussian`.
    pub prediction_channel: String,
    pub scale: f64,
    pub sigma: f64,
    pub target_orgs: Vec<usize>,
    pub experimental: bool,
}

impl Default for PrivacySection {
    fn default() -> Self {
        PrivacySection {
            residual_channel: "identity".into(),
            prediction_channel: "identity".into(),
            scale: 1.0,
            sigma: 0.0,
            target_orgs: Vec::new(),
            experimental: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportSection {
    /// `in_process` or `tcp`.
    pub kind: String,
    pub timeout_secs: u64,
    /// Daemons for organizations `2..=M`, in order. Loopback daemons are
    /// spawned per trial when empty.
    pub addresses: Vec<String>,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            kind: "in_process".into(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            addresses: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Csv {
        path: PathBuf,
        label: String,
        task: Task,
    },
    Blobs {
        n: usize,
        d: usize,
        k: usize,
        cluster_std: f64,
        seed: Option<u64>,
    },
    LinearRegression {
        n: usize,
        d: usize,
        noise: f64,
        seed: Option<u64>,
    },
    LinearClassification {
        n: usize,
        d: usize,
        noise: f64,
        seed: Option<u64>,
    },
}

impl DatasetSpec {
    pub fn task(&self) -> Task {
        match self {
            DatasetSpec::Csv { task, .. } => *task,
            DatasetSpec::LinearRegression { .. } => Task::Regression,
            _ => Task::Classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransportSpec {
    InProcess,
    Tcp {
        timeout: Duration,
        addresses: Vec<SocketAddr>,
    },
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub dataset: DatasetSpec,
    pub train_fraction: f64,
    pub standardize: bool,
    pub n_orgs: usize,
    pub strategy: PartitionStrategy,
    pub partition_seed: Option<u64>,
    pub kind: RunKind,
    pub n_trials: usize,
    pub base_seed: u64,
    pub metric: Metric,
    /// Template; the seed is replaced per trial.
    pub gal: GalConfig,
    pub transport: TransportSpec,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GalError::Config(vec![e.to_string()]))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GalError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() || p.exists() {
            return p.to_path_buf();
        }
        match &self.base_dir {
            Some(dir) => dir.join(p),
            None => p.to_path_buf(),
        }
    }

    /// Checks every key and reports all problems together.
    pub fn validate(&self) -> Result<Experiment> {
        let mut errs: Vec<String> = Vec::new();
        let mut note = |e: String| errs.push(e);

        let ds = &self.dataset;
        let need = |v: Option<usize>, key: &str, note: &mut dyn FnMut(String)| {
            v.unwrap_or_else(|| {
                note(format!(
                    "dataset.{key} is required for source {:?}",
                    ds.source
                ));
                0
            })
        };
        let dataset = match ds.source.as_str() {
            "csv" => {
                let path = match &ds.path {
                    Some(p) => {
                        let p = self.resolve_path(p);
                        if !p.is_file() {
                            note(format!("dataset.path {} does not exist", p.display()));
                        }
                        p
                    }
                    None => {
                        note("dataset.path is required for source \"csv\"".into());
                        PathBuf::new()
                    }
                };
                let task = match ds.task.as_deref().unwrap_or("regression").parse::<Task>() {
                    Ok(t) => t,
                    Err(e) => {
                        note(format!("dataset.task: {e}"));
                        Task::Regression
                    }
                };
                Some(DatasetSpec::Csv {
                    path,
                    label: ds.label.clone().unwrap_or_else(|| "target".into()),
                    task,
                })
            }
            "blobs" => Some(DatasetSpec::Blobs {
                n: need(ds.n, "n", &mut note),
                d: need(ds.d, "d", &mut note),
                k: need(ds.k, "k", &mut note),
                cluster_std: ds.cluster_std.unwrap_or(1.0),
                seed: ds.seed,
            }),
            "linear_regression" => Some(DatasetSpec::LinearRegression {
                n: need(ds.n, "n", &mut note),
                d: need(ds.d, "d", &mut note),
                noise: ds.noise.unwrap_or(0.0),
                seed: ds.seed,
            }),
            "linear_classification" => Some(DatasetSpec::LinearClassification {
                n: need(ds.n, "n", &mut note),
                d: need(ds.d, "d", &mut note),
                noise: ds.noise.unwrap_or(0.0),
                seed: ds.seed,
            }),
            "" => {
                note("dataset.source is required".into());
                None
            }
            other => {
                note(format!(
                    "dataset.source {other:?} unknown (csv, blobs, linear_regression, linear_classification)"
                ));
                None
            }
        };
        let task = dataset.as_ref().map_or(Task::Regression, DatasetSpec::task);

        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            note(format!(
                "split.train_fraction {} must lie in (0, 1)",
                self.split.train_fraction
            ));
        }

        let p = &self.partition;
        let n_orgs = p.n_orgs;
        if n_orgs == 0 {
            note("partition.n_orgs must be >= 1".into());
        }
        let strategy = match p.strategy.as_str() {
            "random" => PartitionStrategy::Random,
            "contiguous" => PartitionStrategy::Contiguous,
            "explicit" => {
                if p.assignments.len() != n_orgs {
                    note(format!(
                        "partition.assignments lists {} organizations, n_orgs is {n_orgs}",
                        p.assignments.len()
                    ));
                }
                PartitionStrategy::Explicit {
                    assignments: p.assignments.clone(),
                    allow_overlap: p.allow_overlap,
                }
            }
            other => {
                note(format!(
                    "partition.strategy {other:?} unknown (random, contiguous, explicit)"
                ));
                PartitionStrategy::Random
            }
        };

        let kind = self.run.kind.parse::<RunKind>().unwrap_or_else(|e| {
            note(format!("run.kind: {e}"));
            RunKind::Gal
        });
        if self.run.n_trials == 0 {
            note("run.n_trials must be >= 1".into());
        }
        let metric = match &self.run.metric {
            Some(m) => m.parse::<Metric>().unwrap_or_else(|e| {
                note(format!("run.metric: {e}"));
                Metric::default_for(task)
            }),
            None => Metric::default_for(task),
        };
        match (metric, task) {
            (Metric::Mad, Task::Classification) => {
                note("run.metric mad needs a regression dataset".into())
            }
            (Metric::Accuracy | Metric::AucRoc, Task::Regression) => note(format!(
                "run.metric {metric} needs a classification dataset"
            )),
            _ => {}
        }

        let gal = self.gal_config(n_orgs.max(1), task, &mut note);

        let t = &self.transport;
        let transport = match t.kind.as_str() {
            "in_process" => TransportSpec::InProcess,
            "tcp" => {
                let addresses: Vec<SocketAddr> = t
                    .addresses
                    .iter()
                    .filter_map(|a| match a.parse() {
                        Ok(addr) => Some(addr),
                        Err(e) => {
                            note(format!("transport.addresses: {a:?}: {e}"));
                            None
                        }
                    })
                    .collect();
                if !t.addresses.is_empty() && t.addresses.len() + 1 != n_orgs {
                    note(format!(
                        "transport.addresses lists {} daemons, expected n_orgs - 1 = {}",
                        t.addresses.len(),
                        n_orgs.saturating_sub(1)
                    ));
                }
                if t.timeout_secs == 0 {
                    note("transport.timeout_secs must be >= 1".into());
                }
                TransportSpec::Tcp {
                    timeout: Duration::from_secs(t.timeout_secs),
                    addresses,
                }
            }
            other => {
                note(format!(
                    "transport.kind {other:?} unknown (in_process, tcp)"
                ));
                TransportSpec::InProcess
            }
        };

        if !errs.is_empty() {
            return Err(GalError::Config(errs));
        }
        let dataset = dataset.unwrap_or_else(|| unreachable!("missing source is reported above"));
        let name = self.dataset.name.clone().unwrap_or_else(|| match &dataset {
            DatasetSpec::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
            _ => self.dataset.source.clone(),
        });
        Ok(Experiment {
            name,
            dataset,
            train_fraction: self.split.train_fraction,
            standardize: self.split.standardize,
            n_orgs,
            strategy,
            partition_seed: p.seed,
            kind,
            n_trials: self.run.n_trials,
            base_seed: self.run.seed,
            metric,
            gal,
            transport,
            out: self.run.out.clone(),
        })
    }

    fn gal_config(&self, m: usize, task: Task, note: &mut dyn FnMut(String)) -> GalConfig {
        let g = &self.gal;
        let default_loss = match task {
            Task::Regression => OverarchingLoss::Squared,
            Task::Classification => OverarchingLoss::CrossEntropy,
        };
        let loss = match &g.loss {
            Some(s) => s.parse().unwrap_or_else(|e| {
                note(format!("gal.loss: {e}"));
                default_loss
            }),
            None => default_loss,
        };
        let per_org = |list: &[String],
                       single: &str,
                       key: &str,
                       note: &mut dyn FnMut(String)|
         -> Vec<String> {
            if list.is_empty() {
                vec![single.to_string(); m]
            } else {
                if list.len() != m {
                    note(format!(
                        "gal.{key} lists {} entries for {m} organizations",
                        list.len()
                    ));
                }
                list.to_vec()
            }
        };
        let learners = per_org(&g.learners, &g.learner, "learners", note)
            .iter()
            .map(|s| {
                s.parse::<LearnerSpec>().unwrap_or_else(|e| {
                    note(format!("gal learner {s:?}: {e}"));
                    LearnerSpec::Constant
                })
            })
            .collect::<Vec<_>>();
        let local_strings = per_org(&g.local_losses, &g.local_loss, "local_losses", note);
        let mut parse_loss = |s: &str, key: &str| {
            s.parse::<LocalLoss>().unwrap_or_else(|e| {
                note(format!("gal.{key} {s:?}: {e}"));
                LocalLoss::squared()
            })
        };
        let local_losses: Vec<LocalLoss> = local_strings
            .iter()
            .map(|s| parse_loss(s, "local_loss"))
            .collect();
        let alice_local_loss = parse_loss(&g.alice_local_loss, "alice_local_loss");
        let weight_mode = match g.weight_mode.as_str() {
            "optimized" => WeightMode::Optimized,
            "uniform" => WeightMode::Uniform,
            other => {
                note(format!(
                    "gal.weight_mode {other:?} unknown (optimized, uniform)"
                ));
                WeightMode::Optimized
            }
        };
        let line_search = match g.line_search.as_str() {
            "bracketing" => LineSearchMode::Bracketing,
            "capped" => LineSearchMode::Capped { a: g.cap_a },
            "fixed" => LineSearchMode::Fixed { eta: g.fixed_eta },
            other => {
                note(format!(
                    "gal.line_search {other:?} unknown (bracketing, capped, fixed)"
                ));
                LineSearchMode::Bracketing
            }
        };
        let pv = &self.privacy;
        let channel = |name: &str, key: &str, note: &mut dyn FnMut(String)| match name {
            "identity" => Channel::Identity,
            "laplace" => Channel::Laplace { scale: pv.scale },
            "gaussian" => Channel::Gaussian {
                sigma: pv.sigma,
                target_orgs: pv.target_orgs.clone(),
            },
            "interval" => Channel::Interval {
                experimental: pv.experimental,
            },
            other => {
                note(format!(
                    "privacy.{key} {other:?} unknown (identity, laplace, gaussian, interval)"
                ));
                Channel::Identity
            }
        };
        let residual_channel = channel(&pv.residual_channel, "residual_channel", note);
        let prediction_channel = channel(&pv.prediction_channel, "prediction_channel", note);
        let cfg = GalConfig {
            t_max: g.t_max,
            eta_stop_threshold: g.eta_stop_threshold,
            weight_mode,
            weight_opt: WeightOpt {
                iterations: g.weight_iterations,
                step_size: g.weight_step_size,
            },
            line_search,
            overarching_loss: loss,
            learners,
            local_losses,
            alice_local_loss,
            seed: 0,
            residual_channel,
            prediction_channel,
        };
        if cfg.learners.len() == m && cfg.local_losses.len() == m {
            if let Err(e) = cfg.validate(m) {
                note(format!("gal: {e}"));
            }
        }
        cfg
    }
}
