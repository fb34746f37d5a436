//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every tolerance is a named constant.

use std::path::PathBuf;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gal_core::data::{
    make_blobs, make_linear_regression, partition_features, views, Dataset, Labels,
    PartitionStrategy, VerticalPartition,
};
use gal_core::experiment::{run_experiment, ExperimentConfig, ResultReport};
use gal_core::gal::{line_search, run_learning, run_with_transport, GalConfig, LineSearchMode};
use gal_core::learners::{LearnerSpec, LocalModel};
use gal_core::losses::{LocalLoss, OverarchingLoss, ScoreMatrix};
use gal_core::oracle::{grid_line_search, grid_weights_two, PlainBoosting};
use gal_core::privacy::Channel;
use gal_core::protocol::{
    CommLedger, FittedPredictions, InProcessTransport, PredictResponse, ResidualBroadcast,
    Transport,
};
use gal_core::Result;

// Criterion 1: Diabetes, M=8, Ridge.
const DIABETES_JOINT_MAD_MAX: f64 = 48.0;
const DIABETES_GAL_MAD_MAX: f64 = 50.0;
const DIABETES_GAL_OVER_JOINT_MAX: f64 = 1.15;
const DIABETES_ALONE_OVER_GAL_MIN: f64 = 1.15;
const DIABETES_RUNTIME_SECS: f64 = 30.0;
// Criterion 2: Boston Housing, M=8, Ridge.
const BOSTON_GAL_MAD_MAX: f64 = 4.0;
const BOSTON_JOINT_MAD_MAX: f64 = 3.8;
const BOSTON_RUNTIME_SECS: f64 = 30.0;
// Criterion 3: Blob. "Materially lower" is pinned as a 20-point gap.
const BLOB_GAL_ACC_MIN: f64 = 95.0;
const BLOB_ALONE_GAP_MIN: f64 = 20.0;
const BLOB_RUNTIME_SECS: f64 = 60.0;
// Criterion 4.
const BOOSTING_EQUIVALENCE_TOL: f64 = 1e-10;
const BOOSTING_DATASETS: usize = 5;
// Criteria 5 and 6.
const MONOTONE_TOL: f64 = 1e-9;
const MONOTONE_MIN_CONFIGS: usize = 200;
const SIMPLEX_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-9;
const WEIGHT_GRID_TOL: f64 = 1e-4;
const WEIGHT_GRID_STEPS: usize = 1000;
// Criterion 7.
const LINE_SEARCH_INSTANCES: usize = 100;
const LINE_SEARCH_GRID_TOL: f64 = 1e-6;
const LINE_SEARCH_GRID_STEP: f64 = 0.01;
const UNIT_STEP_TOL: f64 = 1e-4;
// Criterion 8.
const ROBUST_SIGMA: f64 = 5.0;
const ROBUST_ACC_GAP_MIN: f64 = 10.0;
const ROBUST_TRIALS_MIN: usize = 3;
// Criterion 9.
const DP_GAP_MIN: f64 = 5.0;
// Criterion 11.
const CAPPED_A: f64 = 2.0;
const CAPPED_ROUNDS: usize = 200;
const CAPPED_REL_TOL: f64 = 0.05;

struct Gate {
    failures: usize,
}

impl Gate {
    fn check(&mut self, id: u32, title: &str, outcome: Result<(bool, String)>) {
        let (pass, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} [{id:>2}] {title}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn experiment(body: &str, kind: &str) -> Result<ResultReport> {
    let text = format!("{body}\n[run]\nkind = \"{kind}\"\nn_trials = 4\nseed = 0\n");
    run_experiment(&ExperimentConfig::from_toml(&text)?, None)
}

fn diabetes_body(transport: &str) -> String {
    format!(
        r#"
[dataset]
source = "csv"
path = "{}"
label = "target"
task = "regression"
[partition]
n_orgs = 8
[gal]
learner = "ridge:1"
[transport]
kind = "{transport}"
"#,
        data_path("diabetes.csv").display()
    )
}

fn criterion_1() -> Result<(bool, String)> {
    let start = Instant::now();
    let body = diabetes_body("in_process");
    let gal = experiment(&body, "gal")?;
    let joint = experiment(&body, "joint")?;
    let alone = experiment(&body, "alone")?;
    let secs = start.elapsed().as_secs_f64();
    let pass = joint.mean <= DIABETES_JOINT_MAD_MAX
        && gal.mean <= DIABETES_GAL_MAD_MAX
        && gal.mean <= DIABETES_GAL_OVER_JOINT_MAX * joint.mean
        && alone.mean >= DIABETES_ALONE_OVER_GAL_MIN * gal.mean
        && secs < DIABETES_RUNTIME_SECS;
    Ok((
        pass,
        format!(
            "MAD gal {} joint {} alone {} (alone/gal {:.2}, gal/joint {:.2}) in {secs:.1}s",
            gal.summary,
            joint.summary,
            alone.summary,
            alone.mean / gal.mean,
            gal.mean / joint.mean
        ),
    ))
}

fn criterion_2() -> Result<(bool, String)> {
    let start = Instant::now();
    let body = format!(
        r#"
[dataset]
source = "csv"
path = "{}"
label = "MEDV"
task = "regression"
[partition]
n_orgs = 8
[gal]
learner = "ridge:1"
"#,
        data_path("boston_housing.csv").display()
    );
    let gal = experiment(&body, "gal")?;
    let joint = experiment(&body, "joint")?;
    let secs = start.elapsed().as_secs_f64();
    let pass = gal.mean <= BOSTON_GAL_MAD_MAX
        && joint.mean <= BOSTON_JOINT_MAD_MAX
        && secs < BOSTON_RUNTIME_SECS;
    Ok((
        pass,
        format!(
            "MAD gal {} joint {} in {secs:.1}s",
            gal.summary, joint.summary
        ),
    ))
}

const BLOB_BODY: &str = r#"
[dataset]
source = "blobs"
n = 100
d = 10
k = 10
cluster_std = 1.0
[partition]
n_orgs = 8
[gal]
learner = "ridge:1"
loss = "cross_entropy"
"#;

fn criterion_3() -> Result<(bool, String)> {
    let start = Instant::now();
    let gal = experiment(BLOB_BODY, "gal")?;
    let alone = experiment(BLOB_BODY, "alone")?;
    let secs = start.elapsed().as_secs_f64();
    let pass = gal.mean >= BLOB_GAL_ACC_MIN
        && alone.mean <= gal.mean - BLOB_ALONE_GAP_MIN
        && secs < BLOB_RUNTIME_SECS;
    Ok((
        pass,
        format!(
            "accuracy gal {} alone {} in {secs:.1}s",
            gal.summary, alone.summary
        ),
    ))
}

fn criterion_4() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for i in 0..BOOSTING_DATASETS {
        let seed = 400 + i as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(30..80);
        let d = rng.random_range(1..6);
        let rounds = rng.random_range(3..9);
        let ds = make_linear_regression(n, d, 0.5, seed)?;
        let spec = LearnerSpec::stumps(rng.random_range(2..6), rng.random_range(1..4), 0.5);
        let mut cfg = GalConfig::new(1, OverarchingLoss::Squared, spec.clone());
        cfg.t_max = rounds;
        cfg.eta_stop_threshold = 0.0;
        let run = run_learning(&ds, &VerticalPartition::whole(d), &cfg)?;
        let y = ds.labels().as_matrix().column(0).to_owned();
        let oracle = PlainBoosting::fit(ds.features(), &y, &spec, rounds)?;
        let probe = make_linear_regression(40, d, 0.5, seed + 1000)?;
        for x in [ds.features(), probe.features()] {
            let ours = run.ensemble.predict_local(&[x])?;
            let theirs = oracle.predict(x)?;
            for (a, b) in ours.column(0).iter().zip(theirs.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok((
        worst <= BOOSTING_EQUIVALENCE_TOL,
        format!("max |GAL - boosting| = {worst:.2e} over {BOOSTING_DATASETS} datasets"),
    ))
}

/// Wraps a transport and keeps Alice's residual and the gathered
/// predictions of every round.
struct Recording {
    inner: InProcessTransport,
    residuals: Vec<ScoreMatrix>,
    gathered: Vec<Vec<ScoreMatrix>>,
}

impl Transport for Recording {
    fn n_orgs(&self) -> usize {
        self.inner.n_orgs()
    }
    fn submit_local(&mut self, msg: &ResidualBroadcast) -> Result<()> {
        self.residuals.push(msg.to_matrix()?);
        self.inner.submit_local(msg)
    }
    fn broadcast(&mut self, msg: &ResidualBroadcast, recipients: &[usize]) -> Result<()> {
        self.inner.broadcast(msg, recipients)
    }
    fn gather(&mut self, round: usize) -> Result<Vec<FittedPredictions>> {
        let out = self.inner.gather(round)?;
        self.gathered
            .push(out.iter().map(|f| f.to_matrix()).collect::<Result<_>>()?);
        Ok(out)
    }
    fn predict(&mut self, model_rounds: &[usize], n_star: usize) -> Result<Vec<PredictResponse>> {
        self.inner.predict(model_rounds, n_star)
    }
    fn ledger(&self) -> CommLedger {
        self.inner.ledger()
    }
    fn prediction_ledger(&self) -> CommLedger {
        self.inner.prediction_ledger()
    }
    fn local_model(&self, org: usize, round: usize) -> Option<LocalModel> {
        self.inner.local_model(org, round)
    }
    fn shutdown(&mut self, reason: &str) -> Result<()> {
        self.inner.shutdown(reason)
    }
}

struct SuiteRun {
    history: Vec<gal_core::gal::RoundRecord>,
    initial_loss: f64,
    residuals: Vec<ScoreMatrix>,
    gathered: Vec<Vec<ScoreMatrix>>,
    alice_loss: LocalLoss,
}

/// Randomized configurations: losses × learners × M × residual noise.
fn property_suite() -> Result<Vec<SuiteRun>> {
    let losses = [
        OverarchingLoss::Squared,
        OverarchingLoss::Absolute,
        OverarchingLoss::CrossEntropy,
    ];
    let learners = [
        LearnerSpec::Constant,
        LearnerSpec::ridge(0.5),
        LearnerSpec::stumps(3, 2, 0.5),
    ];
    let mut runs = Vec::new();
    let mut case = 0u64;
    for rep in 0..3 {
        for loss in losses {
            for learner in &learners {
                for m in [1usize, 2, 4, 8] {
                    for noisy in [false, true] {
                        case += 1;
                        let seed = 5000 + case;
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let n = rng.random_range(30..70);
                        let d = m + rng.random_range(0..6);
                        let ds = match loss {
                            OverarchingLoss::CrossEntropy => {
                                make_blobs(n, d, rng.random_range(2..5), 2.0, seed)?
                            }
                            _ => make_linear_regression(n, d, 0.3, seed)?,
                        };
                        let part = partition_features(d, m, seed, &PartitionStrategy::Random)?;
                        let mut cfg = GalConfig::new(m, loss, learner.clone());
                        cfg.t_max = 4 + rep;
                        cfg.eta_stop_threshold = 0.0;
                        cfg.seed = seed;
                        cfg.local_losses = (0..m)
                            .map(|_| LocalLoss::new(rng.random_range(1.0..3.0)))
                            .collect::<Result<_>>()?;
                        if noisy {
                            cfg.residual_channel = Channel::Laplace { scale: 1.0 };
                        }
                        let nodes = gal_core::gal::build_nodes(&ds, None, &part, &cfg)?;
                        let mut t = Recording {
                            inner: InProcessTransport::new(nodes)?,
                            residuals: Vec::new(),
                            gathered: Vec::new(),
                        };
                        let run = run_with_transport(ds.labels(), &cfg, &mut t)?;
                        runs.push(SuiteRun {
                            history: run.ensemble.history,
                            initial_loss: run.ensemble.initial_train_loss,
                            residuals: t.residuals,
                            gathered: t.gathered,
                            alice_loss: cfg.alice_local_loss,
                        });
                    }
                }
            }
        }
    }
    Ok(runs)
}

fn criterion_5(runs: &[SuiteRun]) -> Result<(bool, String)> {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for r in runs {
        let mut prev = r.initial_loss;
        for h in &r.history {
            let rise = h.train_loss - prev;
            worst = worst.max(rise);
            if rise > MONOTONE_TOL {
                violations += 1;
            }
            prev = h.train_loss;
        }
    }
    Ok((
        runs.len() >= MONOTONE_MIN_CONFIGS && violations == 0,
        format!(
            "{} configurations, {violations} violations, largest rise {worst:.2e}",
            runs.len()
        ),
    ))
}

fn criterion_6(runs: &[SuiteRun]) -> Result<(bool, String)> {
    let mut off_simplex = 0;
    let mut lost_to_uniform = 0;
    let mut grid_misses = 0;
    let mut grid_checks = 0;
    let mut records = 0;
    let mut worst_grid: f64 = f64::NEG_INFINITY;
    for r in runs {
        for (i, h) in r.history.iter().enumerate() {
            records += 1;
            let min = h.weights.iter().copied().fold(f64::INFINITY, f64::min);
            let sum: f64 = h.weights.iter().sum();
            if min < 0.0 || (sum - 1.0).abs() > SIMPLEX_TOL {
                off_simplex += 1;
            }
            if h.weight_objective > h.uniform_objective + DOMINANCE_TOL {
                lost_to_uniform += 1;
            }
            if h.weights.len() == 2 {
                let preds = &r.gathered[i];
                let (_, grid) = grid_weights_two(
                    &r.residuals[i],
                    &preds[0],
                    &preds[1],
                    r.alice_loss,
                    WEIGHT_GRID_STEPS,
                );
                grid_checks += 1;
                worst_grid = worst_grid.max(h.weight_objective - grid);
                if h.weight_objective > grid + WEIGHT_GRID_TOL {
                    grid_misses += 1;
                }
            }
        }
    }
    Ok((
        off_simplex == 0 && lost_to_uniform == 0 && grid_misses == 0 && grid_checks > 0,
        format!(
            "{records} weight vectors: {off_simplex} off simplex, {lost_to_uniform} worse than uniform; \
             {grid_checks} M=2 rounds, {grid_misses} beyond grid (worst excess {worst_grid:.2e})"
        ),
    ))
}

fn criterion_7() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut misses = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for i in 0..LINE_SEARCH_INSTANCES {
        let n = rng.random_range(5..40);
        let (loss, y, k) = match i % 3 {
            0 => (
                OverarchingLoss::Squared,
                Labels::Regression(Array1::from_shape_fn(n, |_| rng.random_range(-5.0..5.0))),
                1,
            ),
            1 => (
                OverarchingLoss::Absolute,
                Labels::Regression(Array1::from_shape_fn(n, |_| rng.random_range(-5.0..5.0))),
                1,
            ),
            _ => {
                let k = rng.random_range(2..5);
                let classes: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
                let names = (0..k).map(|c| c.to_string()).collect();
                (
                    OverarchingLoss::CrossEntropy,
                    Labels::from_classes(&classes, names)?,
                    k,
                )
            }
        };
        let f = Array2::from_shape_fn((n, k), |_| rng.random_range(-2.0..2.0));
        let g = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        let step = line_search(loss, &y, &f, &g, LineSearchMode::Bracketing, 1)?;
        let (_, grid) = grid_line_search(loss, &y, &f, &g, -10.0, 10.0, LINE_SEARCH_GRID_STEP)?;
        worst = worst.max(step.value - grid);
        if step.value > grid + LINE_SEARCH_GRID_TOL {
            misses += 1;
        }
    }
    let y = Labels::Regression(Array1::from_shape_fn(50, |_| rng.random_range(-5.0..5.0)));
    let f = Array2::from_shape_fn((50, 1), |_| rng.random_range(-1.0..1.0));
    let g = &y.as_matrix() - &f;
    let unit = line_search(
        OverarchingLoss::Squared,
        &y,
        &f,
        &g,
        LineSearchMode::Bracketing,
        1,
    )?
    .eta;
    Ok((
        misses == 0 && (unit - 1.0).abs() <= UNIT_STEP_TOL,
        format!(
            "{LINE_SEARCH_INSTANCES} instances, {misses} above grid minimum (worst excess {worst:.2e}); analytic step {unit:.10}"
        ),
    ))
}

fn criterion_8() -> Result<(bool, String)> {
    let body = format!(
        "{BLOB_BODY}\n[privacy]\nprediction_channel = \"gaussian\"\nsigma = {ROBUST_SIGMA}\ntarget_orgs = [1, 2, 3, 4]\n"
    );
    let text = |kind: &str| format!("{body}\n[run]\nkind = \"{kind}\"\nn_trials = 4\nseed = 0\n");
    let optimized = run_experiment(&ExperimentConfig::from_toml(&text("gal"))?, None)?;
    let uniform = run_experiment(&ExperimentConfig::from_toml(&text("gal_uniform"))?, None)?;

    // Weight totals from the recorded histories of the same trials.
    let exp = ExperimentConfig::from_toml(&text("gal"))?.validate()?;
    let mut trials_ok = 0;
    let mut detail = Vec::new();
    for trial in 0..exp.n_trials {
        let data = exp.prepare_trial(trial)?;
        let run = run_learning(&data.train, &data.partition, &data.config)?;
        let ok = run
            .ensemble
            .history
            .iter()
            .filter(|h| h.round >= 2)
            .all(|h| {
                let noisy: f64 = h.weights[..4].iter().sum();
                let clean: f64 = h.weights[4..].iter().sum();
                noisy < clean
            })
            && run.ensemble.history.len() >= 2;
        trials_ok += usize::from(ok);
        let r2 = run
            .ensemble
            .history
            .get(1)
            .map_or(f64::NAN, |h| h.weights[..4].iter().sum());
        detail.push(format!("{r2:.3}"));
    }
    let gap = optimized.mean - uniform.mean;
    Ok((
        gap >= ROBUST_ACC_GAP_MIN && trials_ok >= ROBUST_TRIALS_MIN,
        format!(
            "accuracy optimized {} uniform {} (gap {gap:.1}); noisy weight below clean from round 2 in {trials_ok}/4 trials \
             (round-2 noisy totals {})",
            optimized.summary,
            uniform.summary,
            detail.join(", ")
        ),
    ))
}

fn criterion_9() -> Result<(bool, String)> {
    let body = r#"
[dataset]
source = "linear_classification"
n = 1055
d = 41
noise = 0.5
[partition]
n_orgs = 8
[gal]
learner = "ridge:1"
loss = "cross_entropy"
[privacy]
residual_channel = "laplace"
scale = 1.0
"#;
    let dp = experiment(body, "gal")?;
    let alone = experiment(body, "alone")?;
    Ok((
        dp.mean >= alone.mean + DP_GAP_MIN,
        format!(
            "accuracy GAL_DP {} alone {} (gap {:.1})",
            dp.summary,
            alone.summary,
            dp.mean - alone.mean
        ),
    ))
}

fn criterion_10() -> Result<(bool, String)> {
    let inproc = experiment(&diabetes_body("in_process"), "gal")?;
    let tcp = experiment(&diabetes_body("tcp"), "gal")?;
    let identical = inproc == tcp;
    let text = format!("{}\n[run]\nn_trials = 4\n", diabetes_body("in_process"));
    let exp = ExperimentConfig::from_toml(&text)?.validate()?;
    let mut closed_form = true;
    for t in &tcp.trials {
        let n = exp.prepare_trial(t.trial)?.train.n_rows();
        let expect = CommLedger::expected_learning(n, 1, t.rounds, 8);
        closed_form &= t.ledger == expect
            && t.ledger.bytes_alice_to_orgs == 8 * n as u64 * t.rounds as u64 * 7
            && t.ledger.bytes_orgs_to_alice == t.ledger.bytes_alice_to_orgs;
    }
    let l = &tcp.trials[0].ledger;
    Ok((
        identical && closed_form,
        format!(
            "reports identical: {identical}; ledgers match 8·N·K·T·(M−1): {closed_form} (trial 0: {} rounds, {} bytes each way)",
            l.rounds_used, l.bytes_alice_to_orgs
        ),
    ))
}

fn criterion_11() -> Result<(bool, String)> {
    // A covering partition drives both modes to zero loss, which makes a
    // relative comparison meaningless. Leaving one feature unheld gives a
    // positive floor both modes must approach.
    let d = 8;
    let ds: Dataset = make_linear_regression(200, d, 0.0, 1111)?;
    let part = VerticalPartition::new(d, vec![vec![0, 1], vec![2, 3, 4], vec![5, 6]], false)?;
    let mut cfg = GalConfig::new(3, OverarchingLoss::Squared, LearnerSpec::ridge(0.1));
    cfg.t_max = CAPPED_ROUNDS;
    cfg.eta_stop_threshold = 0.0;
    let bracketing = run_learning(&ds, &part, &cfg)?;
    cfg.line_search = LineSearchMode::Capped { a: CAPPED_A };
    let capped = run_learning(&ds, &part, &cfg)?;
    let lb = bracketing
        .ensemble
        .history
        .last()
        .map_or(f64::NAN, |h| h.train_loss);
    let lc = capped
        .ensemble
        .history
        .last()
        .map_or(f64::NAN, |h| h.train_loss);
    let within = (lc - lb).abs() <= CAPPED_REL_TOL * lb;
    let capped_ok = capped.ensemble.history.iter().all(|h| {
        h.eta.abs() <= CAPPED_A / h.round as f64 && h.cap == Some(CAPPED_A / h.round as f64)
    });
    let vs = views(&ds, &part)?;
    let cols: Vec<ArrayView2<'_, f64>> = vs.iter().map(|v| v.columns()).collect();
    let consistent = capped.ensemble.predict_local(&cols)? == capped.train_scores;
    Ok((
        within && capped_ok && consistent && capped.ensemble.rounds.len() == CAPPED_ROUNDS,
        format!(
            "final loss capped {lc:.6e} bracketing {lb:.6e} (rel diff {:.2e}); all |eta_t| <= {CAPPED_A}/t: {capped_ok}",
            (lc - lb).abs() / lb
        ),
    ))
}

fn main() {
    let mut gate = Gate { failures: 0 };
    gate.check(
        1,
        "Diabetes M=8 Ridge: Joint, GAL, Alone MAD",
        criterion_1(),
    );
    gate.check(
        2,
        "BostonHousing M=8 Ridge: GAL and Joint MAD",
        criterion_2(),
    );
    gate.check(
        3,
        "Blob M=8 Ridge cross-entropy: GAL vs Alone accuracy",
        criterion_3(),
    );
    gate.check(4, "M=1 GAL equals plain gradient boosting", criterion_4());
    let suite = property_suite();
    match suite {
        Ok(runs) => {
            gate.check(5, "Training loss non-increasing", criterion_5(&runs));
            gate.check(
                6,
                "Weights on simplex, dominate uniform, match grid",
                criterion_6(&runs),
            );
        }
        Err(e) => {
            gate.check(5, "Training loss non-increasing", Err(e.clone_message()));
            gate.check(
                6,
                "Weights on simplex, dominate uniform, match grid",
                Err(e),
            );
        }
    }
    gate.check(7, "Line search vs grid oracle", criterion_7());
    gate.check(8, "Robustness to noisy organizations", criterion_8());
    gate.check(9, "GAL with Laplace residual noise vs Alone", criterion_9());
    gate.check(10, "In-process and TCP transports agree", criterion_10());
    gate.check(11, "Capped-step mode", criterion_11());
    println!("acceptance: {} of 11 criteria passed", 11 - gate.failures);
    if gate.failures > 0 {
        std::process::exit(1);
    }
}

trait CloneMessage {
    fn clone_message(&self) -> gal_core::GalError;
}

impl CloneMessage for gal_core::GalError {
    fn clone_message(&self) -> gal_core::GalError {
        gal_core::GalError::invalid(self.to_string())
    }
}
