//! `gal`: run experiments, serve an organization, inspect saved ensembles.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gal_core::baselines::RunKind;
use gal_core::experiment::{run_experiment, ExperimentConfig};
use gal_core::gal::EnsembleModel;
use gal_core::protocol::serve_sessions;
use gal_core::{GalError, Result};

mod oracle;

#[derive(Parser)]
#[command(
    name = "gal",
    version,
    about = "Gradient assisted learning across vertically partitioned organizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and print its result table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Base seed; trial i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for reports, per-round histories and ensembles.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        kind: Option<RunKind>,
        /// Number of trials.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Serve one organization of an experiment over TCP. Each incoming
    /// connection is one trial, in order.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Organization index, 2..=M.
        #[arg(long)]
        org: usize,
        #[arg(long, default_value = "127.0.0.1:0")]
        bind: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        kind: Option<RunKind>,
    },
    /// Summarize a saved ensemble, or a report if given an output directory.
    Inspect { path: PathBuf },
    /// Run the brute-force reference checks.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(
    config: &Path,
    seed: Option<u64>,
    kind: Option<RunKind>,
    trials: Option<usize>,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(kind) = kind {
        cfg.run.kind = kind.to_string();
    }
    if let Some(n) = trials {
        cfg.run.n_trials = n;
    }
    Ok(cfg)
}

fn run(args: Command) -> Result<()> {
    match args {
        Command::Run {
            config,
            seed,
            out,
            kind,
            trials,
        } => {
            let cfg = load(&config, seed, kind, trials)?;
            let out = out.or_else(|| cfg.run.out.clone());
            let report = run_experiment(&cfg, out.as_deref())?;
            print!("{}", report.to_text());
            if let Some(dir) = out {
                eprintln!("artifacts written to {}", dir.display());
            }
            Ok(())
        }
        Command::Serve {
            config,
            org,
            bind,
            seed,
            kind,
        } => {
            let exp = load(&config, seed, kind, None)?.validate()?;
            if org < 2 || org > exp.n_orgs {
                return Err(GalError::Config(vec![format!(
                    "--org {org} must lie in 2..={} (org 1 is the label holder)",
                    exp.n_orgs
                )]));
            }
            let listener = TcpListener::bind(&bind).map_err(|e| GalError::Transport {
                org,
                message: format!("cannot bind {bind}: {e}"),
            })?;
            // Scripts read the bound port from this line.
            println!("listening {}", listener.local_addr()?);
            let outcome = serve_sessions(listener, |session| {
                let data = exp.prepare_trial(session)?;
                let mut nodes = exp.trial_nodes(&data)?;
                if org > nodes.len() {
                    return Err(GalError::Config(vec![format!(
                        "run kind {} has {} organizations, no org {org}",
                        exp.kind,
                        nodes.len()
                    )]));
                }
                Ok(nodes.swap_remove(org - 1))
            })?;
            eprintln!(
                "stopped after {} connections, {} messages, {} protocol errors",
                outcome.connections, outcome.messages, outcome.protocol_errors
            );
            Ok(())
        }
        Command::Inspect { path } => {
            print!("{}", inspect(&path)?);
            Ok(())
        }
        Command::Oracle { seed } => {
            let checks = oracle::run_all(seed)?;
            let mut failed = 0;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                failed += usize::from(!c.pass);
            }
            if failed > 0 {
                return Err(GalError::Numeric(format!("{failed} oracle checks failed")));
            }
            Ok(())
        }
    }
}

fn inspect(path: &Path) -> Result<String> {
    if path.is_dir() {
        let text = std::fs::read_to_string(path.join("report.txt"))?;
        return Ok(text);
    }
    let model = EnsembleModel::from_json(&std::fs::read_to_string(path)?)?;
    let mut out = String::new();
    out.push_str(&format!("task: {:?}\n", model.task));
    out.push_str(&format!("organizations: {}\n", model.n_orgs()));
    out.push_str(&format!(
        "overarching loss: {:?}\n",
        model.config.overarching_loss
    ));
    out.push_str(&format!("rounds: {}\n", model.rounds.len()));
    let f0: Vec<String> = model.f0.iter().map(|v| format!("{v:.6}")).collect();
    out.push_str(&format!("initial scores: [{}]\n", f0.join(", ")));
    out.push_str(&format!(
        "initial train loss: {:.6}\n",
        model.initial_train_loss
    ));
    if let Some(last) = model.history.last() {
        out.push_str(&format!("final train loss: {:.6}\n", last.train_loss));
    }
    out.push_str("round  eta        train_loss  weights\n");
    for h in &model.history {
        let w: Vec<String> = h.weights.iter().map(|v| format!("{v:.3}")).collect();
        out.push_str(&format!(
            "{:<6} {:<10.6} {:<11.6} {}\n",
            h.round,
            h.eta,
            h.train_loss,
            w.join(" ")
        ));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                GalError::Config(errs) => {
                    eprintln!("configuration error:");
                    for err in errs {
                        eprintln!("  {err}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
