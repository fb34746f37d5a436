//! Reference checks behind `gal oracle`: each compares a production code
//! path against a brute-force computation on a small generated instance.

use ndarray::{s, Array2, Axis};

use gal_core::data::{blob_centers, make_blobs, make_linear_regression, VerticalPartition};
use gal_core::gal::{
    line_search, optimize_weights, run_learning, GalConfig, LineSearchMode, WeightMode, WeightOpt,
};
use gal_core::learners::LearnerSpec;
use gal_core::losses::{LocalLoss, OverarchingLoss};
use gal_core::oracle::{
    grid_line_search, grid_weights_two, nearest_center_accuracy, ols_fitted, PlainBoosting,
};
use gal_core::Result;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        nearest_center(seed)?,
        least_squares(seed)?,
        line_search_grid(seed)?,
        weight_grid(seed)?,
        boosting(seed)?,
    ])
}

fn nearest_center(seed: u64) -> Result<Check> {
    let (n, d, k) = (60, 4, 3);
    let ds = make_blobs(n, d, k, 0.0, seed)?;
    let classes = ds.labels().classes().unwrap_or_default();
    let acc = nearest_center_accuracy(ds.features(), &blob_centers(k, d, seed), &classes);
    Ok(Check {
        name: "blobs with zero spread sit on their centers",
        pass: acc == 1.0,
        detail: format!("nearest-center accuracy {acc}"),
    })
}

fn least_squares(seed: u64) -> Result<Check> {
    let ds = make_linear_regression(80, 5, 0.0, seed)?;
    let y = ds.labels().as_matrix().column(0).to_owned();
    let mad = ols_fitted(ds.features(), &y).map_or(f64::INFINITY, |fit| {
        (&fit - &y).mapv(f64::abs).mean().unwrap_or(0.0)
    });
    Ok(Check {
        name: "noiseless linear data is fitted by least squares",
        pass: mad < 1e-8,
        detail: format!("training MAD {mad:.2e}"),
    })
}

fn line_search_grid(seed: u64) -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    let reg = make_linear_regression(50, 3, 0.5, seed)?;
    let blobs = make_blobs(60, 4, 3, 2.0, seed)?;
    let cases = [
        (OverarchingLoss::Squared, &reg, 1),
        (OverarchingLoss::Absolute, &reg, 1),
        (OverarchingLoss::CrossEntropy, &blobs, 3),
    ];
    for (loss, ds, k) in cases {
        let f = Array2::zeros((ds.n_rows(), k));
        let g = ds.features().slice(s![.., 0..k]).mapv(|v| 0.1 * v);
        let step = line_search(loss, ds.labels(), &f, &g, LineSearchMode::Bracketing, 1)?;
        let (_, grid) = grid_line_search(loss, ds.labels(), &f, &g, -10.0, 10.0, 0.01)?;
        worst = worst.max(step.value - grid);
    }
    Ok(Check {
        name: "line search reaches the grid minimum",
        pass: worst <= 1e-6,
        detail: format!("largest excess over grid {worst:.2e}"),
    })
}

fn weight_grid(seed: u64) -> Result<Check> {
    let ds = make_linear_regression(60, 2, 0.3, seed)?;
    let r = ds.labels().as_matrix();
    let x = ds.features();
    let preds = [
        x.slice(s![.., 0..1]).to_owned(),
        x.slice(s![.., 1..2]).to_owned(),
    ];
    let loss = LocalLoss::squared();
    let fit = optimize_weights(
        &r,
        &preds,
        loss,
        WeightOpt::default(),
        WeightMode::Optimized,
    )?;
    let (_, grid) = grid_weights_two(&r, &preds[0], &preds[1], loss, 1000);
    Ok(Check {
        name: "two-organization weights match the grid",
        pass: fit.objective <= grid + 1e-4,
        detail: format!("objective {:.6} grid {grid:.6}", fit.objective),
    })
}

fn boosting(seed: u64) -> Result<Check> {
    let ds = make_linear_regression(50, 3, 0.5, seed)?;
    let spec = LearnerSpec::stumps(4, 2, 0.5);
    let rounds = 5;
    let mut cfg = GalConfig::new(1, OverarchingLoss::Squared, spec.clone());
    cfg.t_max = rounds;
    cfg.eta_stop_threshold = 0.0;
    let run = run_learning(&ds, &VerticalPartition::whole(3), &cfg)?;
    let y = ds.labels().as_matrix().column(0).to_owned();
    let plain = PlainBoosting::fit(ds.features(), &y, &spec, rounds)?.predict(ds.features())?;
    let diff = (&run.train_scores.index_axis(Axis(1), 0) - &plain)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Check {
        name: "one organization reduces to gradient boosting",
        pass: diff <= 1e-10,
        detail: format!("max difference {diff:.2e}"),
    })
}
