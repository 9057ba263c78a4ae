//! Repeated split / train / test experiments and their reports.
//!
//! Each run `r` (1-based) splits the data with a seed derived from
//! `(master, r)`; every method then trains on that same partition with its
//! own seed derived from `(master, r, method)`. Timed sections run serially.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boosting::{self, BoostConfig, BoostError, Method};
use crate::data::{
    self, ClassSummary, DataError, Dataset, Partition, SplitSpec, Standardizer, SynthSpec,
};
use crate::randomness::{derive_seed, SeededRng};

/// Stream id for synthetic data generation; runs use ids `1..=repeats`.
const SYNTH_STREAM: u64 = 0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("no sample to summarise")]
    NoSamples,
    #[error("unknown report format {0:?} (expected markdown, csv or jsonl)")]
    UnknownFormat(String),
    #[error("line {line}: {message}")]
    SpecFile { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    #[default]
    Csv,
    Libsvm,
}

impl FromStr for FileFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "libsvm" | "svmlight" => Ok(Self::Libsvm),
            other => Err(BenchError::InvalidSpec(format!(
                "unknown data format {other:?} (expected csv or libsvm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File {
        path: PathBuf,
        format: FileFormat,
        /// CSV only.
        label_column: usize,
        /// CSV only: the label token mapped to `+1`.
        positive_label: String,
    },
    Synthetic(SynthSpec),
}

impl DataSource {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        DataSource::File {
            path: path.into(),
            format: FileFormat::Csv,
            label_column: 0,
            positive_label: "1".into(),
        }
    }

    /// Loads or generates the dataset. Synthetic data depends only on `master_seed`.
    pub fn load(&self, master_seed: u64) -> Result<Dataset> {
        let ds = match self {
            DataSource::File {
                path,
                format: FileFormat::Csv,
                label_column,
                positive_label,
            } => data::load_csv(path, *label_column, positive_label)?,
            DataSource::File {
                path,
                format: FileFormat::Libsvm,
                ..
            } => data::load_libsvm(path)?,
            DataSource::Synthetic(spec) => {
                let mut rng = SeededRng::derived(master_seed, &[SYNTH_STREAM]);
                data::synth_gaussian(&mut rng, spec)?
            }
        };
        Ok(ds)
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::File { path, .. } => write!(f, "{}", path.display()),
            DataSource::Synthetic(s) => write!(
                f,
                "synthetic d={},n={},informative={},shift={}",
                s.d, s.n_per_class, s.informative, s.shift
            ),
        }
    }
}

/// Parses `d=7129,n=36,informative=10[,shift=1.0]`; `n` counts instances per class.
pub fn parse_synth(text: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec {
        n_per_class: 0,
        d: 0,
        informative: 0,
        shift: 1.0,
    };
    let (mut seen_n, mut seen_d, mut seen_inf) = (false, false, false);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| {
            BenchError::InvalidSpec(format!("synthetic parameter {part:?} is not key=value"))
        })?;
        let bad =
            || BenchError::InvalidSpec(format!("bad value {v:?} for synthetic parameter {k}"));
        match k.trim() {
            "d" => (spec.d, seen_d) = (v.trim().parse().map_err(|_| bad())?, true),
            "n" => (spec.n_per_class, seen_n) = (v.trim().parse().map_err(|_| bad())?, true),
            "informative" => {
                (spec.informative, seen_inf) = (v.trim().parse().map_err(|_| bad())?, true)
            }
            "shift" => spec.shift = v.trim().parse().map_err(|_| bad())?,
            other => {
                return Err(BenchError::InvalidSpec(format!(
                    "unknown synthetic parameter {other:?} (expected d, n, informative, shift)"
                )))
            }
        }
    }
    if !(seen_n && seen_d && seen_inf) {
        return Err(BenchError::InvalidSpec(
            "synthetic spec needs d, n and informative".into(),
        ));
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub train_fraction: f64,
    pub stratify: bool,
    /// Z-score features with statistics of the training part of each split.
    pub standardize: bool,
    /// Append a constant-1 feature after any standardisation.
    pub intercept: bool,
    pub boost: BoostConfig,
    pub master_seed: u64,
    /// One untimed single-round fit per method before measuring.
    pub warmup: bool,
}

impl ExperimentSpec {
    pub fn new(source: DataSource, methods: Vec<Method>) -> Self {
        Self {
            source,
            methods,
            repeats: 20,
            train_fraction: 0.8,
            stratify: false,
            standardize: false,
            intercept: false,
            boost: BoostConfig::default(),
            master_seed: BoostConfig::default().seed,
            warmup: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method {m} listed twice"));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        self.boost
            .validate()
            .map_err(|e| BenchError::InvalidSpec(e.to_string()))?;
        if let DataSource::Synthetic(s) = &self.source {
            s.validate()?;
        }
        Ok(())
    }

    /// Applies one `key = value` setting, as found in an experiment file.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| BenchError::InvalidSpec(format!("bad value {value:?} for {key}")))
        }
        let value = value.trim();
        match key.trim() {
            "data" => {
                let format = match &self.source {
                    DataSource::File { format, .. } => *format,
                    _ => FileFormat::Csv,
                };
                let (label_column, positive_label) = self.file_label_settings();
                self.source = DataSource::File {
                    path: value.into(),
                    format,
                    label_column,
                    positive_label,
                };
            }
            "format" => match &mut self.source {
                DataSource::File { format, .. } => *format = value.parse()?,
                _ => {
                    return Err(BenchError::InvalidSpec(
                        "format requires a data file".into(),
                    ))
                }
            },
            "label_column" => match &mut self.source {
                DataSource::File { label_column, .. } => *label_column = num(key, value)?,
                _ => {
                    return Err(BenchError::InvalidSpec(
                        "label_column requires a data file".into(),
                    ))
                }
            },
            "positive_label" => match &mut self.source {
                DataSource::File { positive_label, .. } => *positive_label = value.to_string(),
                _ => {
                    return Err(BenchError::InvalidSpec(
                        "positive_label requires a data file".into(),
                    ))
                }
            },
            "synth" => self.source = DataSource::Synthetic(parse_synth(value)?),
            "methods" => self.methods = parse_methods(value)?,
            "repeats" => self.repeats = num(key, value)?,
            "train_fraction" => self.train_fraction = num(key, value)?,
            "stratify" => self.stratify = parse_bool(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "intercept" => self.intercept = parse_bool(key, value)?,
            "warmup" => self.warmup = parse_bool(key, value)?,
            "seed" => self.master_seed = num(key, value)?,
            "rounds" => self.boost.rounds = num(key, value)?,
            "projections" => self.boost.projections = num(key, value)?,
            "subspace_dim" => self.boost.subspace_dim = num(key, value)?,
            "lambda" => self.boost.lambda = num(key, value)?,
            "clamp" => self.boost.epsilon_clamp = num(key, value)?,
            "stop_on_perfect" => self.boost.stop_on_perfect = parse_bool(key, value)?,
            "stop_on_weak" => self.boost.stop_on_weak = parse_bool(key, value)?,
            other => {
                return Err(BenchError::InvalidSpec(format!(
                    "unknown setting {other:?}"
                )))
            }
        }
        Ok(())
    }

    fn file_label_settings(&self) -> (usize, String) {
        match &self.source {
            DataSource::File {
                label_column,
                positive_label,
                ..
            } => (*label_column, positive_label.clone()),
            _ => (0, "1".into()),
        }
    }
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<Method>()
                .map_err(|e| BenchError::InvalidSpec(e.to_string()))
        })
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(BenchError::InvalidSpec(format!(
            "bad boolean {value:?} for {key}"
        ))),
    }
}

/// Reads flat `key = value` lines in file order; `#` starts a comment.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| BenchError::SpecFile {
            line: i + 1,
            message: format!("expected key = value, found {line:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// One (method, run) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    /// Hex digest of the train/test index lists, identical across methods of a run.
    pub partition: String,
    pub learn_time_s: f64,
    /// `None` when training or prediction failed.
    pub test_error: Option<f64>,
    pub members: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub se: f64,
    pub sd: f64,
}

impl Stats {
    pub fn of(samples: &[f64]) -> Result<Self> {
        let sd = sample_sd(samples)?;
        Ok(Self {
            mean: mean(samples),
            se: sd / (samples.len() as f64).sqrt(),
            sd,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub failures: usize,
    /// Over successful runs only; `None` when every run failed.
    pub time: Option<Stats>,
    pub error: Option<Stats>,
}

impl MethodSummary {
    pub fn from_records(method: Method, records: &[RunRecord]) -> Self {
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.method == method).collect();
        let ok: Vec<&RunRecord> = mine
            .iter()
            .copied()
            .filter(|r| r.test_error.is_some())
            .collect();
        let times: Vec<f64> = ok.iter().map(|r| r.learn_time_s).collect();
        let errors: Vec<f64> = ok.iter().filter_map(|r| r.test_error).collect();
        Self {
            method,
            runs: mine.len(),
            failures: mine.len() - ok.len(),
            time: Stats::of(&times).ok(),
            error: Stats::of(&errors).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub source: String,
    pub dataset: ClassSummary,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<RunRecord>,
    pub environment: String,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> Result<f64> {
    match xs.len() {
        0 => Err(BenchError::NoSamples),
        1 => Ok(0.0),
        n => {
            let m = mean(xs);
            let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
            Ok((ss / (n - 1) as f64).sqrt())
        }
    }
}

/// Sample standard deviation over `√n`; zero for a single sample.
pub fn standard_error(samples: &[f64]) -> Result<f64> {
    Ok(sample_sd(samples)? / (samples.len() as f64).sqrt())
}

pub fn partition_digest(p: &Partition) -> String {
    let mut h = Sha256::new();
    for &i in &p.train {
        h.update((i as u64).to_le_bytes());
    }
    h.update(u64::MAX.to_le_bytes());
    for &i in &p.test {
        h.update((i as u64).to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn environment_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {} logical CPU{}, wall-clock timing, serial execution",
        std::env::consts::ARCH,
        std::env::consts::OS,
        cpus,
        if cpus == 1 { "" } else { "s" }
    )
}

/// Seed handed to `method` in run `run`.
pub fn method_seed(master: u64, run: usize, method: Method) -> u64 {
    let code = Method::ALL
        .iter()
        .position(|&m| m == method)
        .expect("listed") as u64;
    derive_seed(master, &[run as u64, code])
}

fn prepare(ds: &Dataset, p: &Partition, spec: &ExperimentSpec) -> (Dataset, Dataset) {
    let (mut train, mut test) = (ds.subset(&p.train), ds.subset(&p.test));
    if spec.standardize {
        let s = Standardizer::fit(train.features());
        train = train.map_features(|x| s.apply(x));
        test = test.map_features(|x| s.apply(x));
    }
    if spec.intercept {
        train = train.with_intercept();
        test = test.with_intercept();
    }
    (train, test)
}

fn fit_and_score(
    method: Method,
    train: &Dataset,
    test: &Dataset,
    cfg: &BoostConfig,
) -> (f64, std::result::Result<(f64, usize), BoostError>) {
    let start = Instant::now();
    let fitted = boosting::train(method, train, cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let scored = fitted.and_then(|(e, _)| Ok((e.error_rate(test)?, e.members.len())));
    (elapsed, scored)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let ds = spec.source.load(spec.master_seed)?;
    ds.check_two_classes()?;

    let partitions = (1..=spec.repeats)
        .map(|r| {
            let split = SplitSpec {
                train_fraction: spec.train_fraction,
                seed: derive_seed(spec.master_seed, &[r as u64]),
                stratify: spec.stratify,
            };
            data::partition(ds.len(), &split, ds.labels())
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    if spec.warmup {
        let (train, test) = prepare(&ds, &partitions[0], spec);
        let cfg = BoostConfig {
            rounds: 1,
            ..spec.boost
        };
        for &m in &spec.methods {
            let _ = fit_and_score(m, &train, &test, &cfg);
        }
    }

    let mut records = Vec::with_capacity(spec.repeats * spec.methods.len());
    for (i, p) in partitions.iter().enumerate() {
        let run = i + 1;
        let digest = partition_digest(p);
        let (train, test) = prepare(&ds, p, spec);
        for &method in &spec.methods {
            let seed = method_seed(spec.master_seed, run, method);
            let cfg = BoostConfig { seed, ..spec.boost };
            let (elapsed, outcome) = fit_and_score(method, &train, &test, &cfg);
            let (test_error, members, failure) = match outcome {
                Ok((err, n)) => (Some(err), n, None),
                Err(e) => (None, 0, Some(e.to_string())),
            };
            records.push(RunRecord {
                method,
                run,
                seed,
                partition: digest.clone(),
                learn_time_s: elapsed,
                test_error,
                members,
                failure,
            });
        }
    }

    let summaries = spec
        .methods
        .iter()
        .map(|&m| MethodSummary::from_records(m, &records))
        .collect();
    Ok(ExperimentReport {
        source: spec.source.to_string(),
        dataset: ds.summary(),
        summaries,
        records,
        environment: environment_note(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    JsonLines,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "md",
            ReportFormat::Csv => "csv",
            ReportFormat::JsonLines => "jsonl",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" | "jsonlines" => Ok(Self::JsonLines),
            _ => Err(BenchError::UnknownFormat(s.to_string())),
        }
    }
}

fn pm(s: &Stats) -> String {
    format!("{:.2}±{:.2}", s.mean, s.se)
}

pub fn render_report(rep: &ExperimentReport, format: ReportFormat) -> Result<String> {
    if rep.summaries.is_empty() {
        return Err(BenchError::InvalidSpec("report has no methods".into()));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            let c = &rep.dataset;
            writeln!(
                out,
                "Dataset: {} ({} instances, {} features, {} positive / {} negative)\n",
                rep.source, c.instances, c.features, c.positive, c.negative
            )
            .unwrap();
            out.push_str("| method | learn time (s) mean±SE | generalisation error mean±SE |\n");
            out.push_str("|---|---|---|\n");
            let mut notes = Vec::new();
            for s in &rep.summaries {
                let mark = if s.failures > 0 {
                    notes.push(s);
                    format!(" [{}]", notes.len())
                } else {
                    String::new()
                };
                let (time, err) = match (&s.time, &s.error) {
                    (Some(t), Some(e)) => (pm(t), pm(e)),
                    _ => ("—".to_string(), "—".to_string()),
                };
                writeln!(
                    out,
                    "| {}{mark} | {time} | {err} |",
                    s.method.display_name()
                )
                .unwrap();
            }
            for (i, s) in notes.iter().enumerate() {
                let first = rep
                    .records
                    .iter()
                    .find(|r| r.method == s.method && r.failure.is_some())
                    .and_then(|r| r.failure.as_deref())
                    .unwrap_or("");
                writeln!(
                    out,
                    "\n[{}] {} of {} runs failed and are excluded; first failure: {first}",
                    i + 1,
                    s.failures,
                    s.runs
                )
                .unwrap();
            }
            writeln!(out, "\nEnvironment: {}", rep.environment).unwrap();
        }
        ReportFormat::Csv => {
            out.push_str("method,run,seed,learn_time_s,test_error\n");
            for r in &rep.records {
                let err = r.test_error.map(|e| e.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{err}",
                    r.method, r.run, r.seed, r.learn_time_s
                )
                .unwrap();
            }
        }
        ReportFormat::JsonLines => {
            for r in &rep.records {
                out.push_str(&serde_json::to_string(r).expect("records serialize"));
                out.push('\n');
            }
        }
    }
    Ok(out)
}
