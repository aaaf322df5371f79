mod artifacts;
mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqnn::data::SplitSpec;
use cvqnn::models::{Encoding, ModelKind, DEFAULT_CUTOFF};

#[derive(Parser)]
#[command(
    name = "cvqnn",
    version,
    about = "Quantum neural network time-series forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on the training split and save its weights.
    Train(TrainCmd),
    /// Evaluate saved weights on the test split.
    Predict(PredictCmd),
    /// Apply pretrained weights to a new dataset, frozen or fine-tuned.
    Transfer(TransferCmd),
    /// Closed-loop forecast past the end of the series.
    Forecast(ForecastCmd),
    /// Compare CV2 with the DV models on one dataset.
    Benchmark(BenchmarkCmd),
    /// Print a text diagram of a model circuit.
    Draw(DrawCmd),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV file with a header row, or `builtin:sine`.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value = "value")]
    pub target_col: String,
    /// Comma-separated input columns; the target alone when omitted.
    #[arg(long, value_delimiter = ',')]
    pub feature_cols: Vec<String>,
    #[arg(long)]
    pub timestamp_col: Option<String>,
    /// `ratio:F` or `boundary:N`.
    #[arg(long, default_value = "ratio:0.8")]
    pub split: SplitSpec,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// cv1, cv2, cv3, cv-generic:M, dv2 or dv4.
    #[arg(long, default_value = "cv2")]
    pub model: ModelKind,
    /// DV input encoding.
    #[arg(long)]
    pub encoding: Option<Encoding>,
    /// Fock cutoff for CV models.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TrainingArgs {
    /// Defaults to the model's own budget.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian noise added to normalized training inputs.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    #[arg(long, env = "CVQNN_OUT_DIR", default_value = "cvqnn-out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Defaults to weights.json in the output directory.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct PredictCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// Weights file, or `builtin:cv1|cv2|cv3`.
    #[arg(long)]
    pub weights_in: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct TransferCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "builtin:cv2")]
    pub weights_in: String,
    /// Epochs of training from the weights before predicting; 0 keeps them frozen.
    #[arg(long, default_value_t = 0)]
    pub fine_tune: usize,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Where to save fine-tuned weights.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ForecastCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Use these weights instead of training first.
    #[arg(long)]
    pub weights_in: Option<String>,
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[arg(long)]
    pub horizon: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct BenchmarkCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct DrawCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1)]
    pub features: usize,
}

/// Message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<cvqnn::Error> for Failure {
    fn from(e: cvqnn::Error) -> Self {
        use cvqnn::Error::*;
        let code = match &e {
            Config(_) | Usage(_) | Io { .. } => 2,
            Weights(_) => 3,
            Data(_) => 4,
            Training { .. } => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train(c) => commands::train(&c),
        Command::Predict(c) => commands::predict(&c),
        Command::Transfer(c) => commands::transfer(&c),
        Command::Forecast(c) => commands::forecast(&c),
        Command::Benchmark(c) => commands::benchmark(&c),
        Command::Draw(c) => commands::draw(&c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
