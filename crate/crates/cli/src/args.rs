//! Command-line arguments. Every struct serializes into the provenance
//! sidecar with its defaults made explicit.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hsreg_bench::ModelChoice;
use hsreg_core::{PreprocessKind, TargetKind};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "hsreg", version, about = "Hyperspectral fruit-quality regression toolkit")]
pub struct Cli {
    /// `key = value` file of flag defaults; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract ROI mean spectra from an ENVI cube into a spectra CSV.
    Convert(ConvertArgs),
    /// Convert a raw ENVI cube to reflectance with white and dark references.
    Calibrate(CalibrateArgs),
    /// Apply MSC or the second-order difference to a spectra CSV.
    Preprocess(PreprocessArgs),
    /// Split a spectra CSV 7:1:2 into train, validation and test files.
    Split(SplitArgs),
    /// Generate a synthetic spectra CSV with known targets.
    Synth(SynthArgs),
    /// Fit a preprocessing-plus-model pipeline.
    Train(TrainArgs),
    /// Score a fitted pipeline on a spectra CSV.
    Evaluate(EvaluateArgs),
    /// Run the model × preprocessing × sample-size grid.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    Ssc,
    Firmness,
}

impl From<TargetArg> for TargetKind {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Ssc => TargetKind::Ssc,
            TargetArg::Firmness => TargetKind::Firmness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepArg {
    None,
    Msc,
    D2,
}

impl From<PrepArg> for PreprocessKind {
    fn from(p: PrepArg) -> Self {
        match p {
            PrepArg::None => PreprocessKind::None,
            PrepArg::Msc => PreprocessKind::Msc,
            PrepArg::D2 => PreprocessKind::SecondDiff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Svr,
    Knnr,
    Adaboost,
    Plsr,
    Con1dresnet,
}

impl From<ModelArg> for ModelChoice {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Svr => ModelChoice::Svr,
            ModelArg::Knnr => ModelChoice::Knnr,
            ModelArg::Adaboost => ModelChoice::AdaBoost,
            ModelArg::Plsr => ModelChoice::Plsr,
            ModelArg::Con1dresnet => ModelChoice::Con1dResNet,
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ConvertArgs {
    /// ENVI header (.hdr) of the sample cube.
    #[arg(long)]
    pub header: PathBuf,
    /// Binary payload; by default found next to the header.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// ROI mask files (0/1 grids), one output row each.
    #[arg(long, required = true, value_delimiter = ',')]
    pub roi: Vec<PathBuf>,
    /// Target value per ROI; rows get 0 when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub target_values: Vec<f64>,
    /// Optional white and dark reference headers for calibration first.
    #[arg(long, requires = "dark")]
    pub white: Option<PathBuf>,
    #[arg(long, requires = "white")]
    pub dark: Option<PathBuf>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub header: PathBuf,
    #[arg(long)]
    pub cube: Option<PathBuf>,
    /// Header of the white-panel cube; its mean spectrum is the reference.
    #[arg(long)]
    pub white: PathBuf,
    /// Header of the dark (lens cap) cube.
    #[arg(long)]
    pub dark: PathBuf,
    /// Output payload; the header is written beside it with `.hdr`.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct PreprocessArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "d2")]
    pub method: PrepArg,
    /// Spectra whose mean is the MSC reference; defaults to the input.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ssc")]
    pub target: TargetArg,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SplitArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "ssc")]
    pub target: TargetArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory receiving train.csv, val.csv, test.csv and split.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n_samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "ssc")]
    pub target: TargetArg,
    /// White-noise standard deviation (doubled for firmness).
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Quadratic coefficient of the SSC warp.
    #[arg(long)]
    pub curvature: Option<f64>,
    #[arg(long)]
    pub no_scatter: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct NetArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Defaults to `none` for the network and `d2` otherwise.
    #[arg(long, value_enum)]
    pub preprocess: Option<PrepArg>,
    #[arg(long, value_enum, default_value = "ssc")]
    pub target: TargetArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Hyperparameter overrides, e.g. `k=7,c=2`.
    #[arg(long, value_delimiter = ',')]
    pub param: Vec<String>,
    #[command(flatten)]
    pub net: NetArgs,
    /// Per-epoch loss CSV (network only).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Record wall-clock seconds in the history.
    #[arg(long)]
    pub timing: bool,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// Pipeline JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub input: PathBuf,
    /// Per-sample `sample_id,truth,prediction` CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct BenchmarkArgs {
    /// Spectra CSV; a default synthetic set is generated when omitted.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ssc")]
    pub target: TargetArg,
    /// Seed of the synthetic set, and the split seed unless `--seeds` is given.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 200])]
    pub sizes: Vec<usize>,
    /// Models to include; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Vec<ModelArg>,
    /// Preprocessing for the classical models; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub preprocess: Vec<PrepArg>,
    /// Size of the generated set when no input is given.
    #[arg(long, default_value_t = 200)]
    pub n_samples: usize,
    #[command(flatten)]
    pub net: NetArgs,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub timing: bool,
    /// Output stem: writes `<stem>.csv`, `<stem>.json`, `<stem>_plotdata.csv`.
    #[arg(long, short)]
    pub output: PathBuf,
}
