//! Command-line front end: `extract`, `evaluate`, `kfold` and `roc`.
//!
//! Settings come from flags, then an optional TOML file (`--config`), then
//! defaults. Every command writes `config.toml` into the output directory;
//! passing it back through `--config` reproduces the run.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::model_io::write_model;
use crate::classify::{Distance, LabeledSample, SvmParams};
use crate::contours::ContourVariant;
use crate::eval::report::write_roc_csv;
use crate::eval::{
    self, roc_far_gar, split_per_class, ClassifierConfig, ClassifierKind, EvalError, SplitMode,
    SplitSpec, TrainedClassifier,
};
use crate::features::{extract_all, write_feature_csv, FeatureRow};
use crate::image_io::{load_dataset, DatasetEntry, LoadOptions};
use crate::infoset::FuzzifierRef;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidSplit(_) | EvalError::InvalidFolds(_) => CliError::Usage(e.to_string()),
            EvalError::Classify(crate::classify::ClassifyError::InvalidParam(_)) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nblgc", version, about = "NBLGC face descriptor: feature extraction, classification and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one feature row per image to features.csv
    Extract(RunArgs),
    /// Train on a per-class split, test on the rest, write report.csv and model.txt
    Evaluate(RunArgs),
    /// Stratified k-fold cross-validation, write report.csv and folds.csv
    Kfold(RunArgs),
    /// FAR/GAR threshold sweep on a per-class split, write roc.csv
    Roc(RunArgs),
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Extract(a) | Command::Evaluate(a) | Command::Kfold(a) | Command::Roc(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Evaluate(_) => "evaluate",
            Command::Kfold(_) => "kfold",
            Command::Roc(_) => "roc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierChoice {
    Knn,
    Svm,
}

impl FromStr for ClassifierChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(ClassifierChoice::Knn),
            "svm" => Ok(ClassifierChoice::Svm),
            o => Err(format!("unknown classifier '{o}' (expected knn or svm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Index,
    Shuffle,
}

impl FromStr for SplitChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "index" => Ok(SplitChoice::Index),
            "shuffle" => Ok(SplitChoice::Shuffle),
            o => Err(format!("unknown split mode '{o}' (expected index or shuffle)")),
        }
    }
}

/// `WxH` resize target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resize(pub usize, pub usize);

impl FromStr for Resize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("resize '{s}' must look like WxH"))?;
        let w: usize = w.trim().parse().map_err(|_| format!("bad resize width '{w}'"))?;
        let h: usize = h.trim().parse().map_err(|_| format!("bad resize height '{h}'"))?;
        if w == 0 || h == 0 || !w.is_multiple_of(3) || !h.is_multiple_of(3) {
            return Err(format!("resize {w}x{h}: both sides must be positive multiples of 3"));
        }
        Ok(Resize(w, h))
    }
}

impl fmt::Display for Resize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the settings below (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset root laid out as <root>/<class>/<image>.pgm
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Resize target WxH, multiples of 3 [default: 63x63]
    #[arg(long, value_name = "WxH")]
    pub resize: Option<Resize>,
    /// Contour variant: G1, G2 or G3 [default: G1]
    #[arg(long)]
    pub variant: Option<ContourVariant>,
    /// Fuzzifier reference: avg, max or min [default: avg]
    #[arg(long = "ref")]
    pub reference: Option<FuzzifierRef>,
    /// Classifier: knn or svm [default: knn]
    #[arg(long)]
    pub classifier: Option<ClassifierChoice>,
    /// Number of nearest neighbours [default: 1]
    #[arg(long)]
    pub k: Option<usize>,
    /// KNN / ROC distance: log or euclidean [default: log]
    #[arg(long)]
    pub distance: Option<Distance>,
    /// SVM polynomial degree, 1 or 2 [default: 1]
    #[arg(long)]
    pub degree: Option<u32>,
    /// SVM regularization constant [default: 1]
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// SVM kernel offset [default: 1]
    #[arg(long)]
    pub offset: Option<f64>,
    /// SVM stopping tolerance [default: 0.001]
    #[arg(long)]
    pub tol: Option<f64>,
    /// SVM iteration budget per machine, in passes over its samples [default: 100]
    #[arg(long)]
    pub max_passes: Option<usize>,
    /// Training images per class (evaluate, roc)
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// Within-class ordering before splitting: index or shuffle [default: index]
    #[arg(long)]
    pub split: Option<SplitChoice>,
    /// Number of cross-validation folds [default: 10]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed for shuffled splits and folds [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: nblgc-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it [default: all cores]
    #[arg(long, env = "NBLGC_WORKERS")]
    pub workers: Option<usize>,
    /// Standardize features with training statistics before classifying
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub zscore: Option<bool>,
    /// Skip unreadable or malformed images with a warning
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub skip_errors: Option<bool>,
}

/// On-disk configuration. Also the shape of the `config.toml` echo.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub resize: Option<String>,
    pub variant: Option<String>,
    #[serde(rename = "ref")]
    pub reference: Option<String>,
    pub classifier: Option<ClassifierChoice>,
    pub k: Option<usize>,
    pub distance: Option<String>,
    pub degree: Option<u32>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub offset: Option<f64>,
    pub tol: Option<f64>,
    pub max_passes: Option<usize>,
    pub train_per_class: Option<usize>,
    pub split: Option<SplitChoice>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub zscore: Option<bool>,
    pub skip_errors: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub resize: Resize,
    pub variant: ContourVariant,
    pub reference: FuzzifierRef,
    pub classifier: ClassifierChoice,
    pub neighbors_k: usize,
    pub distance: Distance,
    pub svm: SvmParams,
    pub zscore: bool,
    pub train_per_class: Option<usize>,
    pub split: SplitChoice,
    pub folds: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub skip_errors: bool,
}

fn parse_field<T: FromStr<Err = String>>(key: &str, v: Option<&String>) -> Result<Option<T>, CliError> {
    v.map(|s| s.parse().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
        .transpose()
}

impl RunConfig {
    /// Merges flags over the config file over defaults.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let defaults = SvmParams::default();
        let data = args
            .data
            .clone()
            .or(file.data)
            .ok_or_else(|| CliError::Usage("--data is required".into()))?;
        let cfg = RunConfig {
            data,
            resize: args
                .resize
                .or(parse_field("resize", file.resize.as_ref())?)
                .unwrap_or(Resize(63, 63)),
            variant: args
                .variant
                .or(parse_field("variant", file.variant.as_ref())?)
                .unwrap_or_default(),
            reference: args
                .reference
                .or(parse_field("ref", file.reference.as_ref())?)
                .unwrap_or_default(),
            classifier: args.classifier.or(file.classifier).unwrap_or(ClassifierChoice::Knn),
            neighbors_k: args.k.or(file.k).unwrap_or(1),
            distance: args
                .distance
                .or(parse_field("distance", file.distance.as_ref())?)
                .unwrap_or_default(),
            svm: SvmParams {
                degree: args.degree.or(file.degree).unwrap_or(defaults.degree),
                c: args.c.or(file.c).unwrap_or(defaults.c),
                offset: args.offset.or(file.offset).unwrap_or(defaults.offset),
                tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
                max_passes: args.max_passes.or(file.max_passes).unwrap_or(defaults.max_passes),
            },
            zscore: args.zscore.or(file.zscore).unwrap_or(false),
            train_per_class: args.train_per_class.or(file.train_per_class),
            split: args.split.or(file.split).unwrap_or(SplitChoice::Index),
            folds: args.folds.or(file.folds).unwrap_or(10),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("nblgc-out")),
            workers: args.workers.or(file.workers),
            skip_errors: args.skip_errors.or(file.skip_errors).unwrap_or(false),
        };
        if cfg.neighbors_k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        cfg.svm
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn classifier_config(&self) -> ClassifierConfig {
        let kind = match self.classifier {
            ClassifierChoice::Knn => ClassifierKind::Knn {
                neighbors_k: self.neighbors_k,
                distance: self.distance,
            },
            ClassifierChoice::Svm => ClassifierKind::Svm(self.svm),
        };
        ClassifierConfig {
            kind,
            zscore: self.zscore,
        }
    }

    pub fn split_mode(&self) -> SplitMode {
        match self.split {
            SplitChoice::Index => SplitMode::ByIndex,
            SplitChoice::Shuffle => SplitMode::SeededShuffle(self.seed),
        }
    }

    /// Every setting that can affect output. Worker count is left out
    /// because results do not depend on it.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            data: Some(self.data.clone()),
            resize: Some(self.resize.to_string()),
            variant: Some(self.variant.to_string()),
            reference: Some(self.reference.to_string()),
            classifier: Some(self.classifier),
            k: Some(self.neighbors_k),
            distance: Some(self.distance.to_string()),
            degree: Some(self.svm.degree),
            c: Some(self.svm.c),
            offset: Some(self.svm.offset),
            tol: Some(self.svm.tol),
            max_passes: Some(self.svm.max_passes),
            train_per_class: self.train_per_class,
            split: Some(self.split),
            folds: Some(self.folds),
            seed: Some(self.seed),
            out: Some(self.out.clone()),
            workers: None,
            zscore: Some(self.zscore),
            skip_errors: Some(self.skip_errors),
        }
    }

    /// `(key, value)` echo for report headers.
    pub fn echo(&self, command: &str) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), command.to_string()),
            ("data".to_string(), self.data.display().to_string()),
            ("resize".to_string(), self.resize.to_string()),
            ("variant".to_string(), self.variant.to_string()),
            ("ref".to_string(), self.reference.to_string()),
            (
                "split".to_string(),
                match self.split {
                    SplitChoice::Index => "index".to_string(),
                    SplitChoice::Shuffle => "shuffle".to_string(),
                },
            ),
            ("seed".to_string(), self.seed.to_string()),
        ];
        if let Some(n) = self.train_per_class {
            out.push(("train_per_class".to_string(), n.to_string()));
        }
        out
    }
}

/// Loaded dataset with one feature vector per entry.
struct Extracted {
    entries: Vec<DatasetEntry>,
    samples: Vec<LabeledSample>,
    features: Vec<crate::features::FeatureVector>,
}

fn load_and_extract(cfg: &RunConfig) -> Result<Extracted, CliError> {
    if !cfg.data.is_dir() {
        return Err(CliError::Data(format!("dataset root {} is not a directory", cfg.data.display())));
    }
    let opts = LoadOptions {
        resize_to: Some((cfg.resize.0, cfg.resize.1)),
        skip_on_error: cfg.skip_errors,
    };
    let entries = load_dataset(&cfg.data, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    let images: Vec<_> = entries.iter().map(|e| &e.image).collect();
    let features = extract_all(&images, cfg.variant, cfg.reference)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let samples = entries
        .iter()
        .zip(&features)
        .map(|(e, f)| LabeledSample::new(f.values.clone(), e.class_label.clone()))
        .collect();
    Ok(Extracted {
        entries,
        samples,
        features,
    })
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    f(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_config_echo(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let path = cfg.out.join("config.toml");
    let text = toml::to_string(&cfg.to_file())
        .map_err(|e| CliError::Internal(format!("cannot serialize config: {e}")))?;
    write_file(&path, |w| w.write_all(text.as_bytes()))?;
    Ok(path)
}

fn require_samples(x: &Extracted) -> Result<(), CliError> {
    if x.samples.is_empty() {
        Err(CliError::Data("dataset contains no images".into()))
    } else {
        Ok(())
    }
}

fn split(cfg: &RunConfig, x: &Extracted) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), CliError> {
    let n_train = cfg
        .train_per_class
        .ok_or_else(|| CliError::Usage("--train-per-class is required".into()))?;
    if n_train == 0 {
        return Err(CliError::Usage("--train-per-class must be at least 1".into()));
    }
    let spec = SplitSpec {
        n_train,
        mode: cfg.split_mode(),
    };
    let (train, test) = split_per_class(&x.samples, &spec)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| x.samples[i].clone()).collect::<Vec<_>>();
    Ok((pick(&train), pick(&test)))
}

/// Output of a successful command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn cmd_extract(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let x = load_and_extract(cfg)?;
    create_out(&cfg.out)?;
    let dim = (cfg.resize.0 / 3) * (cfg.resize.1 / 3);
    let rows: Vec<FeatureRow<'_>> = x
        .entries
        .iter()
        .zip(&x.features)
        .map(|(e, f)| FeatureRow {
            path: &e.source_path,
            class: &e.class_label,
            features: f,
        })
        .collect();
    let path = cfg.out.join("features.csv");
    write_file(&path, |w| write_feature_csv(w, dim, &rows))?;
    let echo = write_config_echo(cfg)?;
    Ok(CommandOutput {
        files: vec![path.clone(), echo],
        summary: format!("wrote {} feature rows to {}", rows.len(), path.display()),
    })
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let x = load_and_extract(cfg)?;
    require_samples(&x)?;
    let (train, test) = split(cfg, &x)?;
    let ccfg = cfg.classifier_config();
    let model = TrainedClassifier::fit(&train, &ccfg)?;
    let mut report = eval::evaluate_with(&model, &test, &ccfg)?;
    let mut config = cfg.echo("evaluate");
    config.append(&mut report.config);
    report.config = config;

    create_out(&cfg.out)?;
    let report_path = cfg.out.join("report.csv");
    write_file(&report_path, |w| report.write_csv(w))?;
    let model_path = cfg.out.join("model.txt");
    let model_text = write_model(&model.model);
    write_file(&model_path, |w| w.write_all(model_text.as_bytes()))?;
    let echo = write_config_echo(cfg)?;
    Ok(CommandOutput {
        files: vec![report_path, model_path, echo],
        summary: format!(
            "accuracy {}% ({}/{})",
            crate::numfmt::fmt_sig(report.accuracy(), 6),
            report.correct(),
            report.total()
        ),
    })
}

pub fn cmd_kfold(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let x = load_and_extract(cfg)?;
    require_samples(&x)?;
    let mut report = eval::kfold(&x.samples, cfg.folds, cfg.split_mode(), &cfg.classifier_config())?;
    let mut config = cfg.echo("kfold");
    config.append(&mut report.config);
    report.config = config;

    create_out(&cfg.out)?;
    let report_path = cfg.out.join("report.csv");
    write_file(&report_path, |w| report.write_csv(w))?;
    let folds_path = cfg.out.join("folds.csv");
    write_file(&folds_path, |w| report.write_fold_csv(w))?;
    let echo = write_config_echo(cfg)?;
    let accs = report.fold_accuracies().unwrap_or_default();
    let lo = accs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = accs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CommandOutput {
        files: vec![report_path, folds_path, echo],
        summary: format!(
            "{}-fold accuracy {}% (folds {}% .. {}%)",
            cfg.folds,
            crate::numfmt::fmt_sig(report.accuracy(), 6),
            crate::numfmt::fmt_sig(lo, 6),
            crate::numfmt::fmt_sig(hi, 6)
        ),
    })
}

pub fn cmd_roc(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let x = load_and_extract(cfg)?;
    require_samples(&x)?;
    let (train, test) = split(cfg, &x)?;
    let points = roc_far_gar(&train, &test, cfg.distance)?;
    create_out(&cfg.out)?;
    let path = cfg.out.join("roc.csv");
    write_file(&path, |w| write_roc_csv(w, &points))?;
    let echo = write_config_echo(cfg)?;
    Ok(CommandOutput {
        files: vec![path.clone(), echo],
        summary: format!("wrote {} ROC points to {}", points.len(), path.display()),
    })
}

/// Runs one parsed command inside a worker pool of the configured size.
pub fn execute(command: &Command) -> Result<CommandOutput, CliError> {
    let cfg = RunConfig::resolve(command.args())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers.filter(|&n| n > 0) {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Extract(_) => cmd_extract(&cfg),
        Command::Evaluate(_) => cmd_evaluate(&cfg),
        Command::Kfold(_) => cmd_kfold(&cfg),
        Command::Roc(_) => cmd_roc(&cfg),
    })
}

/// Parses `args` (including the program name), runs the command, and returns
/// the process exit code: 0 success, 1 usage error, 2 data error, 3 internal error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            println!("{}", out.summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
