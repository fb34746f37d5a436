//! Test metrics reported in result tables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Labels, Task};
use crate::error::{GalError, Result};
use crate::losses::{argmax_rows, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mad,
    Accuracy,
    AucRoc,
}

impl Metric {
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Regression => Metric::Mad,
            Task::Classification => Metric::Accuracy,
        }
    }

    /// Scale applied before reporting; accuracy is shown in percent.
    pub fn report_scale(self) -> f64 {
        match self {
            Metric::Accuracy => 100.0,
            _ => 1.0,
        }
    }

    pub fn decimals(self) -> usize {
        match self {
            Metric::AucRoc => 2,
            _ => 1,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Mad)
    }
}

impl FromStr for Metric {
    type Err = GalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mad" => Ok(Metric::Mad),
            "accuracy" => Ok(Metric::Accuracy),
            "auc_roc" | "aucroc" | "auc" => Ok(Metric::AucRoc),
            other => Err(GalError::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Mad => "mad",
            Metric::Accuracy => "accuracy",
            Metric::AucRoc => "auc_roc",
        })
    }
}

/// Raw metric value (accuracy as a fraction).
pub fn evaluate(metric: Metric, y: &Labels, scores: &ScoreMatrix) -> Result<f64> {
    if y.len() != scores.nrows() || y.width() != scores.ncols() {
        return Err(GalError::shape(format!(
            "labels {}×{} vs scores {:?}",
            y.len(),
            y.width(),
            scores.dim()
        )));
    }
    if y.is_empty() {
        return Err(GalError::invalid("no observations to evaluate"));
    }
    match (metric, y) {
        (Metric::Mad, Labels::Regression(t)) => Ok(t
            .iter()
            .zip(scores.column(0))
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / t.len() as f64),
        (Metric::Mad, _) => Err(GalError::invalid("MAD needs regression labels")),
        (Metric::Accuracy, Labels::Classification { .. }) => {
            let truth = y.classes().unwrap_or_default();
            let hits = argmax_rows(scores.view())
                .iter()
                .zip(&truth)
                .filter(|(a, b)| a == b)
                .count();
            Ok(hits as f64 / truth.len() as f64)
        }
        (Metric::AucRoc, Labels::Classification { .. }) if y.width() == 2 => {
            let truth = y.classes().unwrap_or_default();
            let margin: Vec<f64> = scores.rows().into_iter().map(|r| r[1] - r[0]).collect();
            auc(&margin, &truth)
        }
        (Metric::AucRoc, Labels::Classification { .. }) => {
            Err(GalError::invalid("AUC-ROC needs exactly 2 classes"))
        }
        (_, Labels::Regression(_)) => Err(GalError::invalid(format!(
            "{metric} needs classification labels"
        ))),
    }
}

/// Mann–Whitney estimate of `P(s_pos > s_neg)` with ties counted ½.
fn auc(score: &[f64], class: &[usize]) -> Result<f64> {
    let mut order: Vec<usize> = (0..score.len()).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && score[order[j + 1]] == score[order[i]] {
            j += 1;
        }
        // Midrank of the tie block, 1-based.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += rank * order[i..=j].iter().filter(|&&o| class[o] == 1).count() as f64;
        i = j + 1;
    }
    let pos = class.iter().filter(|&&c| c == 1).count() as f64;
    let neg = class.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(GalError::invalid("AUC-ROC needs both classes present"));
    }
    Ok((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

/// Mean and standard error (sample standard deviation over `√n`; 0 for a
/// single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `"mean(stderr)"` at the metric's table precision.
pub fn format_mean_stderr(mean: f64, stderr: f64, decimals: usize) -> String {
    format!("{mean:.decimals$}({stderr:.decimals$})")
}
