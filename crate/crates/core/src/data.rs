//! Datasets, vertical feature partitions, and the per-organization views
//! derived from them.
//!
//! Every generator and splitter is a pure function of its arguments and seed.
//! Randomness comes from `ChaCha8Rng` so streams are identical across
//! platforms.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GalError, Result};

/// Learning task of a labelled dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl std::str::FromStr for Task {
    type Err = GalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(GalError::invalid(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Regression(Array1<f64>),
    Classification {
        onehot: Array2<f64>,
        class_names: Vec<String>,
    },
}

impl Labels {
    /// Builds one-hot labels from class indices.
    pub fn from_classes(classes: &[usize], class_names: Vec<String>) -> Result<Self> {
        let k = class_names.len();
        if k < 2 {
            return Err(GalError::invalid(
                "classification needs at least two classes",
            ));
        }
        let mut onehot = Array2::zeros((classes.len(), k));
        for (i, &c) in classes.iter().enumerate() {
            if c >= k {
                return Err(GalError::invalid(format!(
                    "class index {c} out of range for K={k}"
                )));
            }
            onehot[[i, c]] = 1.0;
        }
        Ok(Labels::Classification {
            onehot,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Regression(v) => v.len(),
            Labels::Classification { onehot, .. } => onehot.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Output width: 1 for regression, K for classification.
    pub fn width(&self) -> usize {
        match self {
            Labels::Regression(_) => 1,
            Labels::Classification { onehot, .. } => onehot.ncols(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Labels::Regression(_) => Task::Regression,
            Labels::Classification { .. } => Task::Classification,
        }
    }

    /// Labels as an N×K matrix (N×1 for regression).
    pub fn as_matrix(&self) -> Array2<f64> {
        match self {
            Labels::Regression(v) => v.clone().insert_axis(Axis(1)),
            Labels::Classification { onehot, .. } => onehot.clone(),
        }
    }

    /// Class index of every row; `None` for regression labels.
    pub fn classes(&self) -> Option<Vec<usize>> {
        match self {
            Labels::Regression(_) => None,
            Labels::Classification { onehot, .. } => Some(
                onehot
                    .rows()
                    .into_iter()
                    .map(|row| row.iter().position(|&v| v == 1.0).unwrap_or(0))
                    .collect(),
            ),
        }
    }

    pub fn select(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Regression(v) => Labels::Regression(rows.iter().map(|&i| v[i]).collect()),
            Labels::Classification {
                onehot,
                class_names,
            } => Labels::Classification {
                onehot: onehot.select(Axis(0), rows),
                class_names: class_names.clone(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Labels::Regression(v) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(GalError::invalid("regression labels must be finite"));
                }
            }
            Labels::Classification {
                onehot,
                class_names,
            } => {
                if onehot.ncols() < 2 || class_names.len() != onehot.ncols() {
                    return Err(GalError::invalid(
                        "classification needs K >= 2 named classes",
                    ));
                }
                for (i, row) in onehot.rows().into_iter().enumerate() {
                    let ones = row.iter().filter(|&&x| x == 1.0).count();
                    let zeros = row.iter().filter(|&&x| x == 0.0).count();
                    if ones != 1 || ones + zeros != row.len() {
                        return Err(GalError::invalid(format!(
                            "row {i} is not a one-hot vector"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    id: String,
    features: Array2<f64>,
    labels: Labels,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        id: impl Into<String>,
        features: Array2<f64>,
        labels: Labels,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(GalError::invalid(format!(
                "dataset must be non-empty, got {n}x{d}"
            )));
        }
        if labels.len() != n {
            return Err(GalError::shape(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if feature_names.len() != d {
            return Err(GalError::shape(format!(
                "{} names for {d} features",
                feature_names.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(GalError::invalid("features must be finite"));
        }
        labels.validate()?;
        Ok(Dataset {
            id: id.into(),
            features,
            labels,
            feature_names,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            id: self.id.clone(),
            features: self.features.select(Axis(0), rows),
            labels: self.labels.select(rows),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Z-scores `self` and `other` with column statistics of `self`.
    /// Constant columns are centered only.
    pub fn standardize_pair(&self, other: &Dataset) -> (Dataset, Dataset) {
        let mean = self.features.mean_axis(Axis(0)).expect("non-empty");
        let std = self.features.std_axis(Axis(0), 0.0);
        let scale = std.mapv(|s| if s > 0.0 { s } else { 1.0 });
        let apply = |ds: &Dataset| Dataset {
            features: (&ds.features - &mean) / &scale,
            ..ds.clone()
        };
        (apply(self), apply(other))
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => GalError::Io(io),
            other => GalError::Parse {
                row: 0,
                column: String::new(),
                message: format!("{other:?}"),
            },
        })
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| GalError::Parse {
        row,
        column: column.to_string(),
        message: format!("non-numeric cell {cell:?}"),
    })?;
    if !value.is_finite() {
        return Err(GalError::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite cell {cell:?}"),
        });
    }
    Ok(value)
}

/// Loads a headered CSV. Rows in parse errors are file line numbers, so the
/// first data row is row 2.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| GalError::Parse {
            row: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| GalError::Parse {
            row: 1,
            column: label_column.to_string(),
            message: "label column not found in header".into(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(GalError::invalid("CSV has no feature columns"));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut n = 0;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| GalError::Parse {
            row: line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(GalError::Parse {
                row: line,
                column: String::new(),
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                if cell.trim().is_empty() {
                    return Err(GalError::Parse {
                        row: line,
                        column: label_column.to_string(),
                        message: "empty label".into(),
                    });
                }
                raw_labels.push(cell.trim().to_string());
            } else {
                values.push(parse_cell(cell, line, &headers[j])?);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(GalError::invalid(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let features = Array2::from_shape_vec((n, feature_names.len()), values)
        .map_err(|e| GalError::shape(e.to_string()))?;

    let labels = match task {
        Task::Regression => Labels::Regression(
            raw_labels
                .iter()
                .enumerate()
                .map(|(i, s)| parse_cell(s, i + 2, label_column))
                .collect::<Result<Array1<f64>>>()?,
        ),
        Task::Classification => {
            let class_names: Vec<String> = raw_labels
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let classes: Vec<usize> = raw_labels
                .iter()
                .map(|s| class_names.binary_search(s).expect("label in class set"))
                .collect();
            Labels::from_classes(&classes, class_names)?
        }
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(id, features, labels, feature_names)
}

/// Loads a headered CSV in which every column is numeric.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let mut reader = csv_reader(path.as_ref())?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| GalError::Parse {
            row: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| GalError::Parse {
            row: i + 2,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (j, cell) in record.iter().enumerate() {
            values.push(parse_cell(cell, i + 2, headers.get(j).map_or("", |s| s))?);
        }
        n += 1;
    }
    Array2::from_shape_vec((n, headers.len()), values).map_err(|e| GalError::shape(e.to_string()))
}

fn class_names(k: usize) -> Vec<String> {
    let width = (k - 1).to_string().len();
    (0..k).map(|c| format!("{c:0width$}")).collect()
}

fn default_feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// `k` isotropic Gaussian clusters with centers uniform in `[-10, 10]^d`.
pub fn make_blobs(n: usize, d: usize, k: usize, cluster_std: f64, seed: u64) -> Result<Dataset> {
    if k < 2 || d == 0 || n < k {
        return Err(GalError::invalid(format!(
            "make_blobs needs n >= K >= 2, d >= 1 (n={n}, d={d}, K={k})"
        )));
    }
    if !(cluster_std >= 0.0 && cluster_std.is_finite()) {
        return Err(GalError::invalid(
            "cluster_std must be finite and non-negative",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = Array2::from_shape_fn((k, d), |_| rng.random_range(-10.0..10.0));
    let mut classes: Vec<usize> = (0..n).map(|i| i % k).collect();
    classes.shuffle(&mut rng);
    let features = Array2::from_shape_fn((n, d), |(i, j)| {
        let z: f64 = rng.sample(StandardNormal);
        centers[[classes[i], j]] + cluster_std * z
    });
    Dataset::new(
        format!("blobs-{seed}"),
        features,
        Labels::from_classes(&classes, class_names(k))?,
        default_feature_names(d),
    )
}

/// Cluster centers used by [`make_blobs`] for the same arguments.
pub fn blob_centers(k: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((k, d), |_| rng.random_range(-10.0..10.0))
}

/// `y = x·β + ε` with standard normal features, `β ~ U(-1, 1)^d` and
/// `ε ~ N(0, noise_std²)`.
pub fn make_linear_regression(n: usize, d: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(GalError::invalid(format!(
            "make_linear_regression needs n, d >= 1 (n={n}, d={d})"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(GalError::invalid(
            "noise_std must be finite and non-negative",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Array1<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let features = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let noise: Array1<f64> = (0..n)
        .map(|_| noise_std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y = features.dot(&beta) + noise;
    Dataset::new(
        format!("linreg-{seed}"),
        features,
        Labels::Regression(y),
        default_feature_names(d),
    )
}

/// Binary task thresholding a noisy linear score: `y = 1[x·β + ε > 0]` with
/// `β ~ N(0, 1)^d` and `ε ~ N(0, label_noise²·|β|²)`. Signal is spread over all
/// columns, so any small slice of features is weakly informative.
pub fn make_linear_classification(
    n: usize,
    d: usize,
    label_noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 2 || d == 0 {
        return Err(GalError::invalid(format!(
            "make_linear_classification needs n >= 2, d >= 1 (n={n}, d={d})"
        )));
    }
    if !(label_noise >= 0.0 && label_noise.is_finite()) {
        return Err(GalError::invalid(
            "label_noise must be finite and non-negative",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Array1<f64> = (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let beta_norm = beta.dot(&beta).sqrt();
    let features = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let score = features.dot(&beta);
    let classes: Vec<usize> = score
        .iter()
        .map(|s| {
            let eps: f64 = rng.sample(StandardNormal);
            usize::from(s + label_noise * beta_norm * eps > 0.0)
        })
        .collect();
    let classes = if classes.iter().all(|&c| c == classes[0]) {
        // Degenerate draw; flip one row so both classes exist.
        let mut c = classes;
        c[0] = 1 - c[0];
        c
    } else {
        classes
    };
    Dataset::new(
        format!("linclass-{seed}"),
        features,
        Labels::from_classes(&classes, class_names(2))?,
        default_feature_names(d),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    Random,
    Contiguous,
    Explicit {
        assignments: Vec<Vec<usize>>,
        allow_overlap: bool,
    },
}

/// Assignment of feature columns to organizations `1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalPartition {
    assignments: Vec<Vec<usize>>,
    allow_overlap: bool,
}

impl VerticalPartition {
    pub fn new(d: usize, assignments: Vec<Vec<usize>>, allow_overlap: bool) -> Result<Self> {
        if assignments.is_empty() {
            return Err(GalError::invalid(
                "partition needs at least one organization",
            ));
        }
        let mut seen = BTreeSet::new();
        for (m, cols) in assignments.iter().enumerate() {
            if cols.is_empty() {
                return Err(GalError::invalid(format!(
                    "organization {} holds no features",
                    m + 1
                )));
            }
            for &c in cols {
                if c >= d {
                    return Err(GalError::invalid(format!(
                        "feature index {c} out of range for d={d}"
                    )));
                }
                if !seen.insert(c) && !allow_overlap {
                    return Err(GalError::invalid(format!(
                        "feature {c} assigned to more than one organization"
                    )));
                }
            }
        }
        Ok(VerticalPartition {
            assignments,
            allow_overlap,
        })
    }

    /// Single organization holding all `d` features.
    pub fn whole(d: usize) -> Self {
        VerticalPartition {
            assignments: vec![(0..d).collect()],
            allow_overlap: false,
        }
    }

    pub fn n_orgs(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    pub fn allow_overlap(&self) -> bool {
        self.allow_overlap
    }

    /// Columns of organization `m` (1-based).
    pub fn columns(&self, m: usize) -> Result<&[usize]> {
        if m == 0 || m > self.assignments.len() {
            return Err(GalError::invalid(format!(
                "organization {m} out of range 1..={}",
                self.assignments.len()
            )));
        }
        Ok(&self.assignments[m - 1])
    }

    /// Partition restricted to the listed organizations (1-based), in order.
    pub fn restrict(&self, orgs: &[usize]) -> Result<Self> {
        let assignments = orgs
            .iter()
            .map(|&m| self.columns(m).map(<[usize]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        Ok(VerticalPartition {
            assignments,
            allow_overlap: self.allow_overlap,
        })
    }
}

pub fn partition_features(
    d: usize,
    m: usize,
    seed: u64,
    strategy: &PartitionStrategy,
) -> Result<VerticalPartition> {
    if m == 0 {
        return Err(GalError::invalid("M must be at least 1"));
    }
    match strategy {
        PartitionStrategy::Random | PartitionStrategy::Contiguous if d < m => Err(
            GalError::invalid(format!("cannot split {d} features over {m} organizations")),
        ),
        PartitionStrategy::Random => {
            let mut idx: Vec<usize> = (0..d).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut lists = vec![Vec::new(); m];
            for (pos, &c) in idx.iter().enumerate() {
                lists[pos % m].push(c);
            }
            for l in &mut lists {
                l.sort_unstable();
            }
            VerticalPartition::new(d, lists, false)
        }
        PartitionStrategy::Contiguous => {
            let (base, extra) = (d / m, d % m);
            let mut start = 0;
            let lists = (0..m)
                .map(|i| {
                    let len = base + usize::from(i < extra);
                    let l: Vec<usize> = (start..start + len).collect();
                    start += len;
                    l
                })
                .collect();
            VerticalPartition::new(d, lists, false)
        }
        PartitionStrategy::Explicit {
            assignments,
            allow_overlap,
        } => {
            if assignments.len() != m {
                return Err(GalError::invalid(format!(
                    "explicit partition lists {} organizations, expected {m}",
                    assignments.len()
                )));
            }
            VerticalPartition::new(d, assignments.clone(), *allow_overlap)
        }
    }
}

/// Permutes rows under `seed`; the first `⌈fraction·N⌉` rows become the
/// training split.
pub fn train_test_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GalError::invalid(format!(
            "train_fraction {train_fraction} not in (0, 1)"
        )));
    }
    let n = dataset.n_rows();
    // The epsilon keeps products like 0.7·10 = 7.000000000000001 from rounding up.
    let n_train = (train_fraction * n as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(GalError::invalid(format!(
            "split of {n} rows at {train_fraction} leaves an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((
        dataset.select_rows(&idx[..n_train]),
        dataset.select_rows(&idx[n_train..]),
    ))
}

/// Read-only vertical slice held by one organization.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureView {
    org: usize,
    columns: Array2<f64>,
}

impl FeatureView {
    pub fn new(org: usize, columns: Array2<f64>) -> Self {
        FeatureView { org, columns }
    }

    /// 1-based organization index.
    pub fn org(&self) -> usize {
        self.org
    }

    pub fn columns(&self) -> ArrayView2<'_, f64> {
        self.columns.view()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.nrows()
    }

    pub fn width(&self) -> usize {
        self.columns.ncols()
    }
}

pub fn view(dataset: &Dataset, partition: &VerticalPartition, m: usize) -> Result<FeatureView> {
    let cols = partition.columns(m)?;
    if let Some(&bad) = cols.iter().find(|&&c| c >= dataset.n_features()) {
        return Err(GalError::invalid(format!(
            "feature {bad} out of range for dataset with {} columns",
            dataset.n_features()
        )));
    }
    Ok(FeatureView::new(m, dataset.features.select(Axis(1), cols)))
}

/// Views of every organization, in organization order.
pub fn views(dataset: &Dataset, partition: &VerticalPartition) -> Result<Vec<FeatureView>> {
    (1..=partition.n_orgs())
        .map(|m| view(dataset, partition, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, concatenate};
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_regression_csv() {
        let f = write_csv("a,b,y\n1,2,3\n4,5.5,6\n7,8,9\n");
        let ds = load_csv(f.path(), "y", Task::Regression).unwrap();
        assert_eq!((ds.n_rows(), ds.n_features()), (3, 2));
        assert_eq!(ds.feature_names(), &["a", "b"]);
        assert_eq!(ds.features()[[1, 1]], 5.5);
        assert_eq!(ds.labels(), &Labels::Regression(array![3.0, 6.0, 9.0]));
    }

    #[test]
    fn load_classification_csv_sorts_classes() {
        let f = write_csv("a,y\n1,cat\n2,dog\n3,cat\n");
        let ds = load_csv(f.path(), "y", Task::Classification).unwrap();
        match ds.labels() {
            Labels::Classification {
                onehot,
                class_names,
            } => {
                assert_eq!(class_names, &["cat", "dog"]);
                assert_eq!(onehot, &array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
            }
            _ => panic!("expected classification labels"),
        }
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_csv("a,b,y\n1,abc,3\n");
        match load_csv(f.path(), "y", Task::Regression) {
            Err(GalError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_and_label_are_errors() {
        assert!(load_csv("/nonexistent/file.csv", "y", Task::Regression).is_err());
        let f = write_csv("a,b\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), "y", Task::Regression),
            Err(GalError::Parse { .. })
        ));
        let f = write_csv("a,y\n1,\n");
        assert!(load_csv(f.path(), "y", Task::Classification).is_err());
    }

    #[test]
    fn blobs_shape_and_determinism() {
        let a = make_blobs(100, 10, 10, 1.0, 0).unwrap();
        let b = make_blobs(100, 10, 10, 1.0, 0).unwrap();
        assert_eq!(
            (a.n_rows(), a.n_features(), a.labels().width()),
            (100, 10, 10)
        );
        assert_eq!(a, b);
        assert!(make_blobs(5, 2, 10, 1.0, 0).is_err());
        assert!(make_blobs(10, 0, 2, 1.0, 0).is_err());
    }

    #[test]
    fn zero_std_blobs_are_nearest_center_separable() {
        let ds = make_blobs(60, 4, 5, 0.0, 7).unwrap();
        let centers = blob_centers(5, 4, 7);
        let classes = ds.labels().classes().unwrap();
        let mut correct = 0;
        for (i, row) in ds.features().rows().into_iter().enumerate() {
            let nearest = (0..5)
                .min_by(|&a, &b| {
                    let da = (&row - &centers.row(a)).mapv(|v| v * v).sum();
                    let db = (&row - &centers.row(b)).mapv(|v| v * v).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            correct += usize::from(nearest == classes[i]);
        }
        assert_eq!(correct, 60);
    }

    #[test]
    fn linear_regression_generator() {
        let ds = make_linear_regression(1, 3, 0.5, 1).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(
            make_linear_regression(20, 3, 0.1, 9).unwrap(),
            make_linear_regression(20, 3, 0.1, 9).unwrap()
        );
        assert!(make_linear_regression(0, 3, 0.1, 9).is_err());
    }

    #[test]
    fn contiguous_and_random_partitions() {
        let p = partition_features(10, 2, 0, &PartitionStrategy::Contiguous).unwrap();
        assert_eq!(p.assignments(), &[vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);

        let p = partition_features(13, 8, 42, &PartitionStrategy::Random).unwrap();
        let mut sizes: Vec<usize> = p.assignments().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 2, 2, 2, 2, 2]);

        assert!(partition_features(3, 4, 0, &PartitionStrategy::Random).is_err());
    }

    #[test]
    fn explicit_partition_validation() {
        let overlapping = PartitionStrategy::Explicit {
            assignments: vec![vec![0, 1], vec![1, 2]],
            allow_overlap: false,
        };
        assert!(partition_features(3, 2, 0, &overlapping).is_err());
        let allowed = PartitionStrategy::Explicit {
            assignments: vec![vec![0, 1], vec![1, 2]],
            allow_overlap: true,
        };
        assert!(partition_features(3, 2, 0, &allowed).is_ok());
        let out_of_range = PartitionStrategy::Explicit {
            assignments: vec![vec![0, 5]],
            allow_overlap: false,
        };
        assert!(partition_features(3, 1, 0, &out_of_range).is_err());
    }

    #[test]
    fn split_sizes_use_ceiling() {
        let ds = make_linear_regression(442, 2, 0.0, 0).unwrap();
        let (train, test) = train_test_split(&ds, 0.8, 3).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (354, 88));
        let (again, _) = train_test_split(&ds, 0.8, 3).unwrap();
        assert_eq!(train, again);

        let tiny = make_linear_regression(2, 1, 0.0, 0).unwrap();
        let (a, b) = train_test_split(&tiny, 0.5, 0).unwrap();
        assert_eq!((a.n_rows(), b.n_rows()), (1, 1));
        assert!(train_test_split(&tiny, 0.99, 0).is_err());
        assert!(train_test_split(&tiny, 1.0, 0).is_err());
    }

    #[test]
    fn views_project_columns() {
        let ds = Dataset::new(
            "t",
            array![[1.0, 2.0], [3.0, 4.0]],
            Labels::Regression(array![0.0, 1.0]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let p = VerticalPartition::new(2, vec![vec![0], vec![1]], false).unwrap();
        let v = view(&ds, &p, 1).unwrap();
        assert_eq!(v.columns(), array![[1.0], [3.0]]);
        assert!(view(&ds, &p, 3).is_err());
        assert!(view(&ds, &p, 0).is_err());
    }

    #[test]
    fn disjoint_views_reassemble_original() {
        let ds = make_linear_regression(15, 7, 0.1, 4).unwrap();
        let p = partition_features(7, 3, 11, &PartitionStrategy::Random).unwrap();
        let vs = views(&ds, &p).unwrap();
        let parts: Vec<_> = vs.iter().map(FeatureView::columns).collect();
        let joined = concatenate(Axis(1), &parts).unwrap();
        let order: Vec<usize> = p.assignments().iter().flatten().copied().collect();
        let mut restored = Array2::zeros(joined.dim());
        for (pos, &col) in order.iter().enumerate() {
            restored.column_mut(col).assign(&joined.column(pos));
        }
        assert_eq!(restored, ds.features());
    }
}
