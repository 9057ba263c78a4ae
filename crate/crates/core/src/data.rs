//! Labelled datasets: loading, synthetic generation and train/test splitting.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::randomness::SeededRng;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {source}")]
    Csv {
        path: PathBuf,
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {token:?} as a number")]
    BadNumber {
        line: u64,
        column: usize,
        token: String,
    },
    #[error("line {line}: malformed index:value pair {token:?}")]
    MalformedPair { line: u64, token: String },
    #[error("line {line}: feature index {index} does not increase (previous {previous})")]
    NonIncreasingIndex {
        line: u64,
        previous: usize,
        index: usize,
    },
    #[error("label column {column} is out of range for rows of {fields} fields")]
    LabelColumnOutOfRange { column: usize, fields: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("dataset has a single class (all labels {0:+})")]
    SingleClass(i8),
    #[error("label {value} at row {row} is not -1 or +1")]
    InvalidLabel { row: usize, value: f64 },
    #[error("{labels} labels for {rows} feature rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid synthetic parameters: {0}")]
    InvalidSynth(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Feature matrix with one `-1.0`/`+1.0` label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DenseMatrix,
    labels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassSummary {
    pub instances: usize,
    pub features: usize,
    pub positive: usize,
    pub negative: usize,
}

impl std::fmt::Display for ClassSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let frac = if self.instances == 0 {
            0.0
        } else {
            self.positive as f64 / self.instances as f64
        };
        write!(
            f,
            "N={} d={} positive={} negative={} (positive fraction {:.3})",
            self.instances, self.features, self.positive, self.negative, frac
        )
    }
}

impl Dataset {
    pub fn new(features: DenseMatrix, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(DataError::LabelCount {
                labels: labels.len(),
                rows: features.rows(),
            });
        }
        if let Some(row) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(DataError::InvalidLabel {
                row,
                value: labels[row],
            });
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn summary(&self) -> ClassSummary {
        let positive = self.labels.iter().filter(|&&y| y > 0.0).count();
        ClassSummary {
            instances: self.len(),
            features: self.feature_count(),
            positive,
            negative: self.len() - positive,
        }
    }

    /// Fails unless both classes are present.
    pub fn check_two_classes(&self) -> Result<()> {
        let s = self.summary();
        match (s.positive, s.negative) {
            (0, 0) => Err(DataError::Empty),
            (0, _) => Err(DataError::SingleClass(-1)),
            (_, 0) => Err(DataError::SingleClass(1)),
            _ => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Appends a constant-1 feature, giving linear models an intercept.
    pub fn with_intercept(&self) -> Self {
        Self {
            features: self.features.with_constant_column(1.0),
            labels: self.labels.clone(),
        }
    }

    pub fn map_features(&self, f: impl FnOnce(&DenseMatrix) -> DenseMatrix) -> Self {
        Self {
            features: f(&self.features),
            labels: self.labels.clone(),
        }
    }
}

/// How CSV rows are interpreted.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Column holding the class label; `None` for unlabelled feature files.
    pub label_column: Option<usize>,
    /// Label token mapped to +1; every other token maps to -1.
    pub positive_label: String,
    pub require_both_classes: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: Some(0),
            positive_label: "1".to_string(),
            require_both_classes: true,
        }
    }
}

/// Rows read from a CSV file; `labels` is `None` when no label column was requested.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub features: DenseMatrix,
    pub labels: Option<Vec<f64>>,
}

/// Loads a labelled CSV dataset. Both classes must be present.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: usize,
    positive_label: &str,
) -> Result<Dataset> {
    let opts = CsvOptions {
        label_column: Some(label_column),
        positive_label: positive_label.to_string(),
        require_both_classes: true,
    };
    let table = read_csv(path, &opts)?;
    Dataset::new(
        table.features,
        table.labels.expect("label column requested"),
    )
}

/// Reads a CSV file. A first row whose feature fields are not all numeric is
/// taken as a header and skipped.
pub fn read_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<CsvTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut width: Option<usize> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|source| DataError::Csv {
            path: path.to_path_buf(),
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if let Some(col) = opts.label_column {
            if col >= record.len() {
                return Err(DataError::LabelColumnOutOfRange {
                    column: col,
                    fields: record.len(),
                });
            }
        }
        let is_feature = |j: &usize| Some(*j) != opts.label_column;
        if first {
            first = false;
            let header = (0..record.len())
                .filter(is_feature)
                .any(|j| record[j].parse::<f64>().is_err());
            if header {
                width = Some(record.len());
                continue;
            }
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(DataError::RaggedRow {
                    line,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        for j in (0..record.len()).filter(is_feature) {
            let token = &record[j];
            let v: f64 = token.parse().map_err(|_| DataError::BadNumber {
                line,
                column: j,
                token: token.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::BadNumber {
                    line,
                    column: j,
                    token: token.to_string(),
                });
            }
            features.push(v);
        }
        if let Some(col) = opts.label_column {
            labels.push(if record[col] == *opts.positive_label {
                1.0
            } else {
                -1.0
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::Empty);
    }
    let cols = features.len() / rows;
    let features = DenseMatrix::new(rows, cols, features).expect("rows have equal width");
    let labels = opts.label_column.map(|_| labels);
    if let (Some(l), true) = (&labels, opts.require_both_classes) {
        if !l.contains(&1.0) {
            return Err(DataError::SingleClass(-1));
        }
        if !l.contains(&-1.0) {
            return Err(DataError::SingleClass(1));
        }
    }
    Ok(CsvTable { features, labels })
}

/// Writes `label,x1,...,xd` rows with labels `1`/`-1`, readable by [`load_csv`].
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let csv_err = |source: csv::Error| DataError::Csv {
        path: path.to_path_buf(),
        line: 0,
        source,
    };
    let mut w =
        csv::Writer::from_writer(std::io::BufWriter::new(File::create(path).map_err(io_err)?));
    let mut header = vec!["label".to_string()];
    header.extend((1..=ds.feature_count()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, row) in ds.features().row_iter().enumerate() {
        let mut fields = vec![if ds.labels()[i] > 0.0 {
            "1".to_string()
        } else {
            "-1".to_string()
        }];
        fields.extend(row.iter().map(f64::to_string));
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loads a sparse `<label> <index>:<value> ...` text file into a dense dataset.
///
/// Indices are 1-based and strictly increasing per line; `#` starts a comment.
/// Labels greater than zero map to +1, all others to -1. The feature count is
/// the largest index seen.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let lineno = lineno as u64 + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok.parse().map_err(|_| DataError::BadNumber {
            line: lineno,
            column: 0,
            token: label_tok.to_string(),
        })?;
        let mut row = Vec::new();
        let mut previous = 0usize;
        for tok in tokens {
            let malformed = || DataError::MalformedPair {
                line: lineno,
                token: tok.to_string(),
            };
            let (idx, val) = tok.split_once(':').ok_or_else(malformed)?;
            let idx: usize = idx.parse().map_err(|_| malformed())?;
            let val: f64 = val.parse().map_err(|_| malformed())?;
            if idx == 0 || !val.is_finite() {
                return Err(malformed());
            }
            if idx <= previous {
                return Err(DataError::NonIncreasingIndex {
                    line: lineno,
                    previous,
                    index: idx,
                });
            }
            previous = idx;
            row.push((idx, val));
        }
        max_index = max_index.max(previous);
        rows.push(row);
        labels.push(if label > 0.0 { 1.0 } else { -1.0 });
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let mut features = DenseMatrix::zeros(rows.len(), max_index);
    for (i, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            features.set(i, idx - 1, val);
        }
    }
    Dataset::new(features, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class separately so both folds keep both classes.
    pub stratify: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        Self {
            train_fraction,
            seed,
            stratify: false,
        }
    }
}

/// Row indices of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// `round(fraction * n)` with halves rounded up.
pub fn train_size(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

pub fn partition(n: usize, spec: &SplitSpec, labels: &[f64]) -> Result<Partition> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::InvalidSplit(format!(
            "train fraction {} is not in (0, 1)",
            spec.train_fraction
        )));
    }
    if n < 2 {
        return Err(DataError::InvalidSplit(format!(
            "need at least 2 instances, got {n}"
        )));
    }
    let mut rng = SeededRng::new(spec.seed);
    let order = rng.shuffled_indices(n);
    let (train, test) = if spec.stratify {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [1.0, -1.0] {
            let members: Vec<usize> = order
                .iter()
                .copied()
                .filter(|&i| labels[i] == class)
                .collect();
            let mut k = train_size(spec.train_fraction, members.len());
            if members.len() >= 2 {
                k = k.clamp(1, members.len() - 1);
            }
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
        (train, test)
    } else {
        let k = train_size(spec.train_fraction, n);
        (order[..k].to_vec(), order[k..].to_vec())
    };
    if train.is_empty() || test.is_empty() {
        return Err(DataError::InvalidSplit(format!(
            "fraction {} of {n} instances leaves an empty side",
            spec.train_fraction
        )));
    }
    Ok(Partition { train, test })
}

/// Randomly partitions `ds` into train and test sets.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let p = partition(ds.len(), spec, ds.labels())?;
    Ok((ds.subset(&p.train), ds.subset(&p.test)))
}

/// Per-feature centring and scaling, fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DenseMatrix) -> Self {
        let (n, d) = x.shape();
        let mut mean = vec![0.0; d];
        for r in x.row_iter() {
            crate::linalg::axpy(1.0, r, &mut mean);
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut var = vec![0.0; d];
        for r in x.row_iter() {
            for ((v, xi), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (xi - m) * (xi - m);
            }
        }
        // constant features keep unit scale
        let scale = var
            .iter()
            .map(|v| {
                let sd = (v / n.max(1) as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        let (n, d) = x.shape();
        let mut data = Vec::with_capacity(n * d);
        for r in x.row_iter() {
            data.extend(
                r.iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) / s),
            );
        }
        DenseMatrix::new(n, d, data).expect("shape preserved")
    }
}

/// Parameters of the two-Gaussian synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n_per_class: usize,
    pub d: usize,
    pub informative: usize,
    pub shift: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DataError::InvalidSynth(msg));
        if self.n_per_class == 0 {
            return bad("n_per_class must be at least 1".into());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.informative > self.d {
            return bad(format!(
                "informative ({}) exceeds d ({})",
                self.informative, self.d
            ));
        }
        if !(self.shift > 0.0 && self.shift.is_finite()) {
            return bad(format!("shift must be positive, got {}", self.shift));
        }
        Ok(())
    }
}

/// Two classes of `n_per_class` points each: class `±1` is `N(±shift, 1)` on
/// the first `informative` coordinates and `N(0, 1)` elsewhere. Positive rows
/// come first.
pub fn synth_gaussian(rng: &mut SeededRng, spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = 2 * spec.n_per_class;
    let mut data = Vec::with_capacity(n * spec.d);
    let mut labels = Vec::with_capacity(n);
    for class in [1.0, -1.0] {
        for _ in 0..spec.n_per_class {
            for j in 0..spec.d {
                let centre = if j < spec.informative {
                    class * spec.shift
                } else {
                    0.0
                };
                data.push(centre + rng.standard_normal());
            }
            labels.push(class);
        }
    }
    Dataset::new(DenseMatrix::new(n, spec.d, data).expect("shape"), labels)
}
