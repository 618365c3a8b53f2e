use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "typedmood", version, about = "Mood prediction from typing data, with identity obfuscation")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Run directory; each stage writes to a subdirectory named after it.
    #[arg(long, global = true, env = super::OUT_ENV, default_value = "typedmood-run")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for fold and grid jobs (default: all cores).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// TOML file with default flag values; command-line flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate synthetic event logs with planted mood and identity signals.
    Gen(GenArgs),
    /// Fit vocabularies and turn event logs into a dataset file.
    Featurize(FeaturizeArgs),
    /// Fit one model on a dataset and save it as an artifact.
    Train(TrainArgs),
    /// Noise-injected retraining sweep over lambda and sigma.
    Nimlp(NimlpArgs),
    /// Nested cross-validation of mood prediction per modality set.
    Evaluate(EvaluateArgs),
    /// Identity probes on raw features and on learned representations.
    Probe(ProbeArgs),
    /// Token associations, timing tests, keystroke histograms and t-SNE.
    Analyze(AnalyzeArgs),
    /// Collect stage outputs into tables and plots.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Featurize(_) => "featurize",
            Command::Train(_) => "train",
            Command::Nimlp(_) => "nimlp",
            Command::Evaluate(_) => "evaluate",
            Command::Probe(_) => "probe",
            Command::Analyze(_) => "analyze",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 17)]
    pub users: usize,
    /// Days per user; without it the default total of 1641 days is spread
    /// over the users.
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long, conflicts_with = "days")]
    pub total_days: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub identity_strength: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mood_strength: f64,
    #[arg(long, default_value_t = 1000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 137)]
    pub apps: usize,
    #[arg(long)]
    pub sessions_per_day: Option<f64>,
    #[arg(long)]
    pub words_per_session: Option<f64>,
    /// Negative, neutral and positive shares.
    #[arg(long, value_delimiter = ',')]
    pub class_mix: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Char,
    Split,
    Word,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeaturizeArgs {
    /// Event-log directory (default: `<run>/gen/logs`).
    #[arg(long)]
    #[serde(skip)]
    pub logs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantArg::Char)]
    pub variant: VariantArg,
    /// Modalities to featurize, e.g. `tka` or `tk`.
    #[arg(long, default_value = "tka")]
    pub modalities: String,
    #[arg(long, default_value_t = crate::features::DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    /// Participants with fewer labeled days are dropped.
    #[arg(long, default_value_t = crate::datamodel::MIN_REPORTS_PER_USER)]
    pub min_reports: usize,
    /// Extra copy of the fitted feature configuration.
    #[arg(long)]
    #[serde(skip)]
    pub config_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Majority,
    Mlp,
    Svm,
    Logreg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    Mood,
    Identity,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MlpArgs {
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "512,64")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset file (default: `<run>/featurize/dataset.tsv`).
    #[arg(long)]
    #[serde(skip)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::Mlp)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = TargetArg::Mood)]
    pub target: TargetArg,
    #[arg(long, default_value = "tka")]
    pub modalities: String,
    #[command(flatten)]
    pub mlp: MlpArgs,
    /// SVM box constraint.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// SVM kernel: `rbf`, `rbf:<gamma>` or a polynomial degree.
    #[arg(long, default_value = "rbf")]
    pub kernel: String,
    /// Leave this outer fold out of training.
    #[arg(long)]
    pub holdout_fold: Option<usize>,
    #[arg(long, default_value_t = crate::eval::N_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "interleaved")]
    pub split: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NimlpArgs {
    #[arg(long)]
    #[serde(skip)]
    pub dataset: Option<PathBuf>,
    /// Pretrained MLP artifact; without it an MLP is pretrained here on
    /// every fold except the validation fold.
    #[arg(long)]
    #[serde(skip)]
    pub pretrained: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub sigma_grid: Option<Vec<f64>>,
    /// Extra copy of the sweep report JSON.
    #[arg(long)]
    #[serde(skip)]
    pub report_out: Option<PathBuf>,
    /// `ratio` or `privacy`.
    #[arg(long, default_value = "ratio")]
    pub rule: String,
    /// `batch` or `sample`.
    #[arg(long, default_value = "batch")]
    pub noise: String,
    #[arg(long, default_value = "tka")]
    pub modalities: String,
    /// Validation fold when pretraining here or when the pretrained
    /// artifact records none.
    #[arg(long, default_value_t = 0)]
    pub val_fold: usize,
    #[arg(long, default_value_t = crate::eval::N_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "interleaved")]
    pub split: String,
    #[command(flatten)]
    pub mlp: MlpArgs,
    #[arg(long)]
    #[serde(skip)]
    pub grid_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub dataset: Option<PathBuf>,
    /// Refit vocabularies on each outer-train set from these event logs.
    #[arg(long)]
    #[serde(skip)]
    pub refit_logs: Option<PathBuf>,
    /// Modality sets, e.g. `tka,tk,ta,t,k,a`.
    #[arg(long, value_delimiter = ',', default_value = "tka,tk,ta,t,k,a")]
    pub sets: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "majority,mlp,svm")]
    pub families: Vec<String>,
    #[arg(long, value_enum, default_value_t = TargetArg::Mood)]
    pub target: TargetArg,
    #[arg(long, default_value_t = crate::eval::N_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "interleaved")]
    pub split: String,
    /// TOML file overriding the hyperparameter grids.
    #[arg(long)]
    #[serde(skip)]
    pub grid_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "t,k,a,tka")]
    pub sets: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "mlp,svm")]
    pub families: Vec<String>,
    #[arg(long, default_value_t = crate::eval::N_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value = "interleaved")]
    pub split: String,
    #[arg(long)]
    #[serde(skip)]
    pub grid_file: Option<PathBuf>,
    /// MLP or NI-MLP artifacts whose representations are probed.
    #[arg(long = "model")]
    #[serde(skip)]
    pub models: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    #[serde(skip)]
    pub logs: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub dataset: Option<PathBuf>,
    /// MLP or NI-MLP artifacts whose representations are embedded by t-SNE.
    #[arg(long = "model")]
    #[serde(skip)]
    pub models: Vec<PathBuf>,
    #[arg(long, default_value_t = crate::analysis::MIN_TOKEN_COUNT)]
    pub min_count: usize,
    #[arg(long, default_value_t = crate::analysis::TOP_WORDS)]
    pub top_words: usize,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub tsne_iterations: usize,
    #[arg(long, default_value_t = crate::datamodel::MIN_REPORTS_PER_USER)]
    pub min_reports: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {}
