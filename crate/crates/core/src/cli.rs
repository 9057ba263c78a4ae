//! The `rpboost` command line: train, predict, bench and synth.
//!
//! Settings resolve as flag > config file > `RPBOOST_SEED` (seed only) > default.
//! Exit codes: 0 success, 1 usage or validation, 2 data, 3 numerical failure.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchError, DataSource, ExperimentSpec, FileFormat, ReportFormat};
use crate::boosting::{self, BoostConfig, BoostError, Method};
use crate::data::{self, CsvOptions, DataError, Dataset};
use crate::learners::LearnerError;
use crate::linalg::DenseMatrix;
use crate::model::{Model, ModelError};

pub const SEED_ENV: &str = "RPBOOST_SEED";

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rpboost",
    version,
    about = "Boosted ridge classifiers in random subspaces, with baselines and a benchmark harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one method on a whole labelled file and save the model.
    Train(TrainArgs),
    /// Label the rows of a feature file with a saved model.
    Predict(PredictArgs),
    /// Repeated split/train/test comparison of several methods.
    Bench(BenchArgs),
    /// Write a two-Gaussian synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input data file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Input format: csv or libsvm [default: csv]
    #[arg(long)]
    pub format: Option<FileFormat>,
    /// CSV column holding the class label [default: 0]
    #[arg(long)]
    pub label_column: Option<usize>,
    /// CSV label token mapped to +1; every other token is -1 [default: 1]
    #[arg(long)]
    pub positive_label: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct BoostArgs {
    /// Boosting rounds K (averaged fits for rprrc) [default: 300]
    #[arg(short = 'K', long)]
    pub rounds: Option<usize>,
    /// Projections P averaged per round [default: 3]
    #[arg(short = 'P', long)]
    pub projections: Option<usize>,
    /// Subspace dimension m [default: 3]
    #[arg(short = 'm', long)]
    pub subspace_dim: Option<usize>,
    /// Ridge penalty lambda [default: 0.3]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Clamp keeping the weighted error inside [c, 1-c] [default: 1e-10]
    #[arg(long)]
    pub clamp: Option<f64>,
    /// Master seed [default: $RPBOOST_SEED, else 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Append a constant-1 feature before training [default: off]
    #[arg(long)]
    pub intercept: bool,
    /// Flat `key = value` settings file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// rrc, rrc-boost, rpboost, rprrc or stump-boost [default: rpboost]
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-round trace CSV [default: <out>.trace.csv]
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature file: CSV rows of d values, or libsvm.
    #[arg(long)]
    pub data: PathBuf,
    /// Input format: csv or libsvm [default: csv]
    #[arg(long)]
    pub format: Option<FileFormat>,
    /// CSV column holding true labels; enables error reporting [default: none]
    #[arg(long)]
    pub label_column: Option<usize>,
    /// CSV label token mapped to +1 [default: 1]
    #[arg(long, default_value = "1")]
    pub positive_label: String,
    /// Write labels here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Synthetic source instead of a file: d=..,n=..(per class),informative=..[,shift=1.0]
    #[arg(long, conflicts_with = "data")]
    pub synth: Option<String>,
    /// Comma-separated methods [default: rrc,rrc-boost,rpboost]
    #[arg(long)]
    pub methods: Option<String>,
    /// Independent split/train/test runs [default: 20]
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Training share of each split [default: 0.8]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Preserve class proportions in splits [default: off]
    #[arg(long)]
    pub stratify: bool,
    /// Z-score features with training-split statistics [default: off]
    #[arg(long)]
    pub standardize: bool,
    /// Skip the untimed warm-up fit [default: warm-up on]
    #[arg(long)]
    pub no_warmup: bool,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Write the markdown table here (always printed to stdout).
    #[arg(long)]
    pub markdown: Option<PathBuf>,
    /// Write raw records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write raw records as JSON lines.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Feature count.
    #[arg(long)]
    pub d: usize,
    /// Instances per class.
    #[arg(long)]
    pub n: usize,
    /// Leading features whose class means differ.
    #[arg(long)]
    pub informative: usize,
    /// Class mean offset on informative features [default: 1.0]
    #[arg(long, default_value_t = 1.0)]
    pub shift: f64,
    /// Seed [default: $RPBOOST_SEED, else 42]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn data(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn learner_code(e: &LearnerError) -> u8 {
    match e {
        LearnerError::Data(_) | LearnerError::FeatureCount { .. } => EXIT_DATA,
        LearnerError::InvalidLambda(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

impl From<BoostError> for CliError {
    fn from(e: BoostError) -> Self {
        let code = match &e {
            BoostError::InvalidConfig(_)
            | BoostError::IdentityShape { .. }
            | BoostError::Random(_) => EXIT_USAGE,
            BoostError::Fit { source, .. } | BoostError::Learner(source) => learner_code(source),
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let code = match e {
            DataError::InvalidSplit(_) | DataError::InvalidSynth(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Data(d) => d.into(),
            other => Self::usage(other),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::data(e)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Defaults, then `RPBOOST_SEED`, then the config file, then flags.
fn resolve_spec(
    data: &DataArgs,
    boost: &BoostArgs,
    method_key: bool,
) -> Result<(ExperimentSpec, Option<String>), CliError> {
    let default_methods = vec![Method::Rrc, Method::RrcBoost, Method::RpBoost];
    let mut spec = ExperimentSpec::new(DataSource::Synthetic(SYNTH_UNSET), default_methods);
    let mut has_source = false;
    if let Some(seed) = env_seed()? {
        spec.master_seed = seed;
    }
    let mut method = None;
    if let Some(path) = &boost.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let settings = bench::parse_settings(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        for (k, v) in settings {
            if method_key && k == "method" {
                method = Some(v);
                continue;
            }
            has_source |= k == "data" || k == "synth";
            spec.apply_setting(&k, &v)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        }
    }
    if let Some(p) = &data.data {
        spec.apply_setting("data", &p.to_string_lossy())?;
        has_source = true;
    }
    if let DataSource::File {
        format,
        label_column,
        positive_label,
        ..
    } = &mut spec.source
    {
        if let Some(f) = data.format {
            *format = f;
        }
        if let Some(c) = data.label_column {
            *label_column = c;
        }
        if let Some(p) = &data.positive_label {
            positive_label.clone_from(p);
        }
    } else if data.format.is_some() || data.label_column.is_some() || data.positive_label.is_some()
    {
        return Err(CliError::usage(
            "--format, --label-column and --positive-label need a data file",
        ));
    }
    let b = &mut spec.boost;
    if let Some(k) = boost.rounds {
        b.rounds = k;
    }
    if let Some(p) = boost.projections {
        b.projections = p;
    }
    if let Some(m) = boost.subspace_dim {
        b.subspace_dim = m;
    }
    if let Some(l) = boost.lambda {
        b.lambda = l;
    }
    if let Some(c) = boost.clamp {
        b.epsilon_clamp = c;
    }
    if let Some(s) = boost.seed {
        spec.master_seed = s;
    }
    spec.boost.seed = spec.master_seed;
    spec.intercept |= boost.intercept;
    if !has_source {
        spec.source = DataSource::Synthetic(SYNTH_UNSET);
    }
    Ok((spec, method))
}

/// Marks "no source given"; `d = 0` never validates.
const SYNTH_UNSET: data::SynthSpec = data::SynthSpec {
    n_per_class: 0,
    d: 0,
    informative: 0,
    shift: 1.0,
};

fn require_source(spec: &ExperimentSpec) -> Result<(), CliError> {
    if spec.source == DataSource::Synthetic(SYNTH_UNSET) {
        return Err(CliError::usage(
            "no input data: pass --data (or --synth for bench)",
        ));
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let (spec, file_method) = resolve_spec(&args.data, &args.boost, true)?;
    require_source(&spec)?;
    let token = args
        .method
        .clone()
        .or(file_method)
        .unwrap_or_else(|| Method::RpBoost.token().to_string());
    let method: Method = token.parse().map_err(CliError::usage)?;
    let cfg = spec.boost;
    cfg.validate()?;

    let ds = spec.source.load(spec.master_seed)?;
    let ds = if spec.intercept {
        ds.with_intercept()
    } else {
        ds
    };
    let (ensemble, trace) = boosting::train(method, &ds, &cfg)?;
    let model = Model {
        ensemble,
        intercept: spec.intercept,
    };
    model.save(&args.out)?;
    let trace_path = args.trace.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".trace.csv");
        PathBuf::from(p)
    });
    if let Some(t) = &trace {
        write_file(&trace_path, &t.to_csv())?;
    }
    let train_error = model.ensemble.error_rate(&ds).map_err(BoostError::from)?;
    eprintln!(
        "trained {} on {} with {} member(s); training error {:.4}; model written to {}{}",
        method.display_name(),
        ds.summary(),
        model.ensemble.members.len(),
        train_error,
        args.out.display(),
        if trace.is_some() {
            format!(", trace to {}", trace_path.display())
        } else {
            String::new()
        }
    );
    Ok(())
}

/// Widens libsvm rows whose trailing features were all zero.
fn pad_columns(x: DenseMatrix, d: usize) -> DenseMatrix {
    if x.cols() >= d {
        return x;
    }
    let mut out = DenseMatrix::zeros(x.rows(), d);
    for (i, row) in x.row_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    out
}

pub fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let model = Model::load(&args.model)?;
    let d = model.input_dim();
    let (x, labels) = match args.format.unwrap_or_default() {
        FileFormat::Csv => {
            let opts = CsvOptions {
                label_column: args.label_column,
                positive_label: args.positive_label.clone(),
                require_both_classes: false,
            };
            let t = data::read_csv(&args.data, &opts)?;
            (t.features, t.labels)
        }
        FileFormat::Libsvm => {
            let ds: Dataset = data::load_libsvm(&args.data)?;
            let x = pad_columns(ds.features().clone(), d);
            (x, Some(ds.labels().to_vec()))
        }
    };
    if x.cols() != d {
        return Err(CliError::data(format!(
            "dimension mismatch: model expects d={d} features per row, {} has {}",
            args.data.display(),
            x.cols()
        )));
    }
    let pred = model.predict_rows(&x).map_err(BoostError::from)?;
    let mut text = String::with_capacity(pred.len() * 3);
    for p in &pred {
        text.push_str(if *p > 0.0 { "1\n" } else { "-1\n" });
    }
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data(format!("cannot write labels: {e}")))?,
    }
    if let Some(y) = labels {
        let wrong = pred.iter().zip(&y).filter(|(p, t)| p != t).count();
        eprintln!(
            "error {:.2} ({wrong} of {} misclassified)",
            wrong as f64 / y.len() as f64,
            y.len()
        );
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let (mut spec, _) = resolve_spec(&args.data, &args.boost, false)?;
    if let Some(s) = &args.synth {
        spec.apply_setting("synth", s)?;
    }
    require_source(&spec)?;
    if let Some(m) = &args.methods {
        spec.apply_setting("methods", m)?;
    }
    if let Some(r) = args.repeats {
        spec.repeats = r;
    }
    if let Some(f) = args.train_fraction {
        spec.train_fraction = f;
    }
    spec.stratify |= args.stratify;
    spec.standardize |= args.standardize;
    if args.no_warmup {
        spec.warmup = false;
    }

    let report = bench::run_experiment(&spec)?;
    let md = bench::render_report(&report, ReportFormat::Markdown)?;
    print!("{md}");
    if let Some(p) = &args.markdown {
        write_file(p, &md)?;
    }
    for (path, format) in [
        (&args.csv, ReportFormat::Csv),
        (&args.jsonl, ReportFormat::JsonLines),
    ] {
        if let Some(p) = path {
            write_file(p, &bench::render_report(&report, format)?)?;
        }
    }
    if report.summaries.iter().all(|s| s.error.is_none()) {
        let first = report
            .records
            .iter()
            .find_map(|r| r.failure.clone())
            .unwrap_or_default();
        return Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("every run failed; first failure: {first}"),
        });
    }
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = data::SynthSpec {
        n_per_class: args.n,
        d: args.d,
        informative: args.informative,
        shift: args.shift,
    };
    spec.validate()?;
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(BoostConfig::default().seed),
    };
    let ds = DataSource::Synthetic(spec).load(seed)?;
    data::write_csv(&args.out, &ds)?;
    eprintln!("wrote {} to {}", ds.summary(), args.out.display());
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `args` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
