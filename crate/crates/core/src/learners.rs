//! Organization-local model classes that fit a feature view to a residual
//! target under an `ℓ_q` loss.
//!
//! Multi-output targets are fitted one column at a time. No learner uses
//! randomness, so a fit is a pure function of its inputs.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};
use crate::linalg::{max_eigenvalue, spd_solve_regularized};
use crate::losses::{local_loss_value, LocalLoss, ScoreMatrix};
use crate::optim::golden_section;

const RIDGE_GD_ITERATIONS: usize = 500;
const RIDGE_GD_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    Constant,
    Ridge {
        lambda: f64,
        /// Z-score columns with statistics of the training view.
        standardize: bool,
    },
    BoostedStumps {
        n_rounds: usize,
        max_depth: usize,
        shrinkage: f64,
        min_leaf: usize,
    },
}

impl LearnerSpec {
    pub fn ridge(lambda: f64) -> Self {
        LearnerSpec::Ridge {
            lambda,
            standardize: true,
        }
    }

    pub fn stumps(n_rounds: usize, max_depth: usize, shrinkage: f64) -> Self {
        LearnerSpec::BoostedStumps {
            n_rounds,
            max_depth,
            shrinkage,
            min_leaf: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LearnerSpec::Constant => Ok(()),
            LearnerSpec::Ridge { lambda, .. } => {
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(GalError::invalid(format!(
                        "ridge lambda {lambda} must be finite and >= 0"
                    )))
                }
            }
            LearnerSpec::BoostedStumps {
                n_rounds,
                max_depth,
                shrinkage,
                min_leaf,
            } => {
                if n_rounds == 0 || max_depth == 0 || min_leaf == 0 {
                    return Err(GalError::invalid(
                        "stumps need n_rounds, max_depth, min_leaf >= 1",
                    ));
                }
                if !(shrinkage > 0.0 && shrinkage <= 1.0) {
                    return Err(GalError::invalid(format!(
                        "shrinkage {shrinkage} not in (0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = GalError;

    /// `constant`, `ridge:<lambda>[:raw]`, `stumps:<n>:<depth>:<shrinkage>[:<min_leaf>]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || GalError::invalid(format!("cannot parse learner spec {s:?}"));
        let spec = match parts.as_slice() {
            ["constant"] => LearnerSpec::Constant,
            ["ridge", lambda] => LearnerSpec::ridge(lambda.parse().map_err(|_| bad())?),
            ["ridge", lambda, "raw"] => LearnerSpec::Ridge {
                lambda: lambda.parse().map_err(|_| bad())?,
                standardize: false,
            },
            ["stumps", n, depth, shrinkage] => LearnerSpec::stumps(
                n.parse().map_err(|_| bad())?,
                depth.parse().map_err(|_| bad())?,
                shrinkage.parse().map_err(|_| bad())?,
            ),
            ["stumps", n, depth, shrinkage, min_leaf] => LearnerSpec::BoostedStumps {
                n_rounds: n.parse().map_err(|_| bad())?,
                max_depth: depth.parse().map_err(|_| bad())?,
                shrinkage: shrinkage.parse().map_err(|_| bad())?,
                min_leaf: min_leaf.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Constant => write!(f, "constant"),
            LearnerSpec::Ridge {
                lambda,
                standardize: true,
            } => write!(f, "ridge:{lambda}"),
            LearnerSpec::Ridge {
                lambda,
                standardize: false,
            } => write!(f, "ridge:{lambda}:raw"),
            LearnerSpec::BoostedStumps {
                n_rounds,
                max_depth,
                shrinkage,
                min_leaf,
            } => {
                write!(f, "stumps:{n_rounds}:{max_depth}:{shrinkage}")?;
                if *min_leaf != 1 {
                    write!(f, ":{min_leaf}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Regression tree stored as a node arena rooted at index 0. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "params", rename_all = "snake_case")]
pub enum ModelParams {
    Constant {
        values: Vec<f64>,
    },
    /// `pred[k] = intercept[k] + Σ_j coef[k][j]·x[j]` in original units.
    Linear {
        coef: Vec<Vec<f64>>,
        intercept: Vec<f64>,
    },
    Trees {
        base: Vec<f64>,
        trees: Vec<Vec<RegressionTree>>,
    },
}

/// A fitted residual model `f_m`. Immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    spec: LearnerSpec,
    input_width: usize,
    output_width: usize,
    params: ModelParams,
}

impl LocalModel {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.output_width
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<ScoreMatrix> {
        if x.ncols() != self.input_width {
            return Err(GalError::invalid(format!(
                "model expects {} columns, view has {}",
                self.input_width,
                x.ncols()
            )));
        }
        let n = x.nrows();
        let k = self.output_width;
        let mut out = Array2::zeros((n, k));
        match &self.params {
            ModelParams::Constant { values } => {
                for mut row in out.rows_mut() {
                    row.assign(&ArrayView1::from(values.as_slice()));
                }
            }
            ModelParams::Linear { coef, intercept } => {
                for c in 0..k {
                    let beta = ArrayView1::from(coef[c].as_slice());
                    let col = x.dot(&beta) + intercept[c];
                    out.column_mut(c).assign(&col);
                }
            }
            ModelParams::Trees { base, trees } => {
                for c in 0..k {
                    for (i, row) in x.rows().into_iter().enumerate() {
                        let mut p = base[c];
                        for tree in &trees[c] {
                            p += tree.predict_row(row);
                        }
                        out[[i, c]] = p;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Fits `spec` on `x` (N×d_m) to `target` (N×K) under `loss`.
pub fn fit(
    spec: &LearnerSpec,
    x: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    loss: LocalLoss,
) -> Result<LocalModel> {
    spec.validate()?;
    if x.nrows() != target.nrows() {
        return Err(GalError::shape(format!(
            "view has {} rows, target has {}",
            x.nrows(),
            target.nrows()
        )));
    }
    if target.nrows() == 0 || target.ncols() == 0 {
        return Err(GalError::shape("empty target"));
    }
    if target.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(GalError::Numeric("non-finite input to local fit".into()));
    }
    let constant = constant_model(spec, x.ncols(), target, loss);
    let model = match spec {
        LearnerSpec::Constant => return Ok(constant),
        LearnerSpec::Ridge {
            lambda,
            standardize,
        } => {
            if x.nrows() < 2 {
                return Ok(constant_as_linear(spec, x.ncols(), &constant));
            }
            fit_ridge(spec, x, target, loss, *lambda, *standardize)
        }
        LearnerSpec::BoostedStumps {
            n_rounds,
            max_depth,
            shrinkage,
            min_leaf,
        } => fit_trees(
            spec, x, target, loss, *n_rounds, *max_depth, *shrinkage, *min_leaf,
        ),
    };
    // Every class contains the constants; never do worse than the best one.
    let achieved = local_loss_value(loss, target, model.predict(x)?.view())?;
    let baseline = local_loss_value(loss, target, constant.predict(x)?.view())?;
    if achieved <= baseline {
        Ok(model)
    } else if matches!(spec, LearnerSpec::Ridge { .. }) {
        Ok(constant_as_linear(spec, x.ncols(), &constant))
    } else {
        Ok(LocalModel {
            params: ModelParams::Trees {
                base: constant_values(&constant),
                trees: vec![Vec::new(); target.ncols()],
            },
            ..model
        })
    }
}

fn constant_values(model: &LocalModel) -> Vec<f64> {
    match &model.params {
        ModelParams::Constant { values } => values.clone(),
        _ => unreachable!("constant model"),
    }
}

fn constant_model(
    spec: &LearnerSpec,
    width: usize,
    target: ArrayView2<'_, f64>,
    loss: LocalLoss,
) -> LocalModel {
    let values = target
        .axis_iter(Axis(1))
        .map(|col| best_constant(col.iter().copied(), loss))
        .collect();
    LocalModel {
        spec: spec.clone(),
        input_width: width,
        output_width: target.ncols(),
        params: ModelParams::Constant { values },
    }
}

fn constant_as_linear(spec: &LearnerSpec, width: usize, constant: &LocalModel) -> LocalModel {
    let values = constant_values(constant);
    LocalModel {
        spec: spec.clone(),
        input_width: width,
        output_width: values.len(),
        params: ModelParams::Linear {
            coef: vec![vec![0.0; width]; values.len()],
            intercept: values,
        },
    }
}

/// Minimizer of `Σ |v − c|^q` over constants `c`.
pub fn best_constant(values: impl Iterator<Item = f64>, loss: LocalLoss) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    let q = loss.q();
    if q == 2.0 {
        return v.iter().sum::<f64>() / v.len() as f64;
    }
    v.sort_by(f64::total_cmp);
    if q == 1.0 {
        let n = v.len();
        return if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
    }
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if lo == hi {
        return lo;
    }
    let tol = 1e-12 * (hi - lo).max(lo.abs().max(hi.abs()));
    golden_section(|c| v.iter().map(|&t| loss.eval(t, c)).sum(), lo, hi, tol).0
}

struct Design {
    /// Standardized active columns plus a trailing intercept column of ones.
    z: Array2<f64>,
    active: Vec<usize>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

fn build_design(x: ArrayView2<'_, f64>, standardize: bool) -> Design {
    let n = x.nrows();
    let mut active = Vec::new();
    let mut center = Vec::new();
    let mut scale = Vec::new();
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            active.push(j);
            center.push(mean);
            scale.push(if standardize { var.sqrt() } else { 1.0 });
        }
    }
    let p = active.len();
    let mut z = Array2::<f64>::ones((n, p + 1));
    for (a, &j) in active.iter().enumerate() {
        for i in 0..n {
            z[[i, a]] = (x[[i, j]] - center[a]) / scale[a];
        }
    }
    Design {
        z,
        active,
        center,
        scale,
    }
}

fn fit_ridge(
    spec: &LearnerSpec,
    x: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    loss: LocalLoss,
    lambda: f64,
    standardize: bool,
) -> LocalModel {
    let design = build_design(x, standardize);
    let p = design.active.len();
    let n = x.nrows() as f64;
    let zc = design.z.slice(ndarray::s![.., ..p]);

    // Centered columns decouple the unpenalized intercept from the slopes.
    let mut gram = zc.t().dot(&zc);
    for a in 0..p {
        gram[[a, a]] += lambda;
    }
    let mut coef = Vec::with_capacity(target.ncols());
    let mut intercept = Vec::with_capacity(target.ncols());
    for col in target.axis_iter(Axis(1)) {
        let mean_t = col.sum() / n;
        let centered = col.mapv(|v| v - mean_t);
        let rhs = zc.t().dot(&centered);
        let slopes = if p > 0 {
            spd_solve_regularized(&gram, &rhs)
        } else {
            Array1::zeros(0)
        };
        let mut theta = Array1::zeros(p + 1);
        theta.slice_mut(ndarray::s![..p]).assign(&slopes);
        theta[p] = mean_t;
        if loss.q() != 2.0 {
            theta = refine_lq(&design.z, col, theta, loss, lambda);
        }
        let (beta, b0) = to_original_units(&design, x.ncols(), &theta);
        coef.push(beta);
        intercept.push(b0);
    }
    LocalModel {
        spec: spec.clone(),
        input_width: x.ncols(),
        output_width: target.ncols(),
        params: ModelParams::Linear { coef, intercept },
    }
}

fn to_original_units(design: &Design, width: usize, theta: &Array1<f64>) -> (Vec<f64>, f64) {
    let p = design.active.len();
    let mut beta = vec![0.0; width];
    let mut b0 = theta[p];
    for a in 0..p {
        let slope = theta[a] / design.scale[a];
        beta[design.active[a]] = slope;
        b0 -= slope * design.center[a];
    }
    (beta, b0)
}

/// Full-batch gradient descent on `mean ℓ_q(t, zθ) + (λ/N)|β|²`, started from
/// the squared-loss solution. Returns the best iterate seen.
fn refine_lq(
    z: &Array2<f64>,
    t: ArrayView1<'_, f64>,
    start: Array1<f64>,
    loss: LocalLoss,
    lambda: f64,
) -> Array1<f64> {
    let n = z.nrows() as f64;
    let p = z.ncols() - 1;
    let objective = |theta: &Array1<f64>| {
        let pred = z.dot(theta);
        let data: f64 = t
            .iter()
            .zip(pred.iter())
            .map(|(&a, &b)| loss.eval(a, b))
            .sum::<f64>()
            / n;
        let pen: f64 = theta.iter().take(p).map(|v| v * v).sum::<f64>() * lambda / n;
        data + pen
    };

    let q = loss.q();
    let curvature = max_eigenvalue(&(z.t().dot(z) / n));
    let resid = &t - &z.dot(&start);
    let mean_abs = resid.iter().map(|v| v.abs()).sum::<f64>() / n;
    let loss_scale = if q >= 2.0 {
        q * (q - 1.0) * mean_abs.max(1.0).powf(q - 2.0)
    } else {
        q
    };
    let lipschitz = (loss_scale * curvature + 2.0 * lambda / n).max(f64::MIN_POSITIVE);
    let step = RIDGE_GD_STEP / lipschitz;

    let mut theta = start;
    let mut best = (objective(&theta), theta.clone());
    for _ in 0..RIDGE_GD_ITERATIONS {
        let pred = z.dot(&theta);
        let dpred: Array1<f64> = t
            .iter()
            .zip(pred.iter())
            .map(|(&a, &b)| loss.derivative(a, b) / n)
            .collect();
        let mut grad = z.t().dot(&dpred);
        for a in 0..p {
            grad[a] += 2.0 * lambda / n * theta[a];
        }
        theta = &theta - &(grad * step);
        if theta.iter().any(|v| !v.is_finite()) {
            break;
        }
        let obj = objective(&theta);
        if obj < best.0 {
            best = (obj, theta.clone());
        }
    }
    best.1
}

#[allow(clippy::too_many_arguments)]
fn fit_trees(
    spec: &LearnerSpec,
    x: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    loss: LocalLoss,
    n_rounds: usize,
    max_depth: usize,
    shrinkage: f64,
    min_leaf: usize,
) -> LocalModel {
    let n = x.nrows();
    let mut base = Vec::with_capacity(target.ncols());
    let mut trees = Vec::with_capacity(target.ncols());
    for col in target.axis_iter(Axis(1)) {
        let b = best_constant(col.iter().copied(), loss);
        let mut pred = vec![b; n];
        let mut col_trees = Vec::with_capacity(n_rounds);
        for _ in 0..n_rounds {
            let neg_grad: Vec<f64> = (0..n).map(|i| -loss.derivative(col[i], pred[i])).collect();
            let residual: Vec<f64> = (0..n).map(|i| col[i] - pred[i]).collect();
            let tree = grow_tree(
                x, &neg_grad, &residual, loss, max_depth, min_leaf, shrinkage,
            );
            for (i, row) in x.rows().into_iter().enumerate() {
                pred[i] += tree.predict_row(row);
            }
            col_trees.push(tree);
        }
        base.push(b);
        trees.push(col_trees);
    }
    LocalModel {
        spec: spec.clone(),
        input_width: x.ncols(),
        output_width: target.ncols(),
        params: ModelParams::Trees { base, trees },
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact greedy variance-reduction split over `rows`. Ties keep the lowest
/// feature index, then the lowest threshold. Gains within rounding of each
/// other count as tied, so bit-level differences in `grad` cannot swap
/// splits that produce the same partition.
fn best_split(
    x: ArrayView2<'_, f64>,
    grad: &[f64],
    rows: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let total: f64 = rows.iter().map(|&i| grad[i]).sum();
    let parent = total * total / n as f64;
    let tie = 1e-12 * rows.iter().map(|&i| grad[i] * grad[i]).sum::<f64>();
    let mut best: Option<SplitChoice> = None;
    let mut order = rows.to_vec();
    for feature in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
        let mut left_sum = 0.0;
        for pos in 0..n - 1 {
            left_sum += grad[order[pos]];
            let n_left = pos + 1;
            let (lo, hi) = (x[[order[pos], feature]], x[[order[pos + 1], feature]]);
            if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64
                + right_sum * right_sum / (n - n_left) as f64
                - parent;
            if gain > best.as_ref().map_or(0.0, |b| b.gain) + tie {
                best = Some(SplitChoice {
                    feature,
                    threshold: 0.5 * (lo + hi),
                    gain,
                });
            }
        }
    }
    best
}

fn grow_tree(
    x: ArrayView2<'_, f64>,
    grad: &[f64],
    residual: &[f64],
    loss: LocalLoss,
    max_depth: usize,
    min_leaf: usize,
    shrinkage: f64,
) -> RegressionTree {
    fn grow(
        nodes: &mut Vec<TreeNode>,
        ctx: &(ArrayView2<'_, f64>, &[f64], &[f64], LocalLoss, usize, f64),
        rows: Vec<usize>,
        depth: usize,
    ) -> usize {
        let (x, grad, residual, loss, min_leaf, shrinkage) = *ctx;
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let split = if depth > 0 {
            best_split(x, grad, &rows, min_leaf)
        } else {
            None
        };
        match split {
            Some(s) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| x[[i, s.feature]] <= s.threshold);
                let left = grow(nodes, ctx, left_rows, depth - 1);
                let right = grow(nodes, ctx, right_rows, depth - 1);
                nodes[idx] = TreeNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
            }
            None => {
                // Leaf value: optimal constant shift of the current residuals.
                let c = best_constant(rows.iter().map(|&i| residual[i]), loss);
                nodes[idx] = TreeNode::Leaf {
                    value: shrinkage * c,
                };
            }
        }
        idx
    }

    let mut nodes = Vec::new();
    let ctx = (x, grad, residual, loss, min_leaf, shrinkage);
    grow(&mut nodes, &ctx, (0..x.nrows()).collect(), max_depth);
    RegressionTree { nodes }
}
