//! Command-line grammar. Every argument struct serializes so commands can
//! echo their full invocation next to their outputs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "beziergan",
    version,
    about = "Smooth curve synthesis with a rational Bézier GAN"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build a dataset directory.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Sample curves from a checkpoint.
    Generate(GenerateArgs),
    /// Compute evaluation metrics for a checkpoint.
    Evaluate(EvaluateArgs),
    /// Serve a checkpoint over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetCommand {
    /// Superformula shapes with s1, s2 drawn uniformly.
    Superformula(SuperformulaArgs),
    /// Resample point-sequence files.
    Load(LoadArgs),
    /// Synthetic half-hull waterlines.
    Waterline(WaterlineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SuperformulaArgs {
    /// Lobe count m.
    #[arg(long, default_value_t = 3)]
    pub m: u32,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub s1_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub s1_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s2_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub s2_max: f64,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Dat,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct LoadArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Dat)]
    pub format: FormatArg,
    /// A file or a directory of files with the format's extension.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    /// Extra point density per unit curvature.
    #[arg(long, default_value_t = 1.0)]
    pub curvature_weight: f64,
    /// Keep raw coordinates instead of scaling x to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct WaterlineArgs {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub curvature_weight: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintArg {
    Open,
    Closed,
    /// Last control point fixed at (1, 0).
    PinnedLast,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputArg {
    Bezier,
    Direct,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset directory written by `dataset`.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for checkpoints, history and the config echo.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 5e-5)]
    pub lr_d: f64,
    #[arg(long, default_value_t = 2e-4)]
    pub lr_g: f64,
    #[arg(long, default_value_t = 10)]
    pub eval_every: u64,
    /// Periodic checkpoint interval; 0 writes only the final one.
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: u64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_info: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_r1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_r2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_r3: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_r4: f64,
    #[arg(long, default_value_t = 2)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub noise_dim: usize,
    /// Bézier degree (control points minus one).
    #[arg(long, default_value_t = 31)]
    pub degree: usize,
    #[arg(long, default_value_t = 3)]
    pub kumaraswamy_m: usize,
    /// none, axis-x, axis-y or rotational:N.
    #[arg(long, default_value = "none")]
    pub symmetry: String,
    #[arg(long, value_enum, default_value_t = ConstraintArg::Open)]
    pub constraint: ConstraintArg,
    #[arg(long, value_enum, default_value_t = OutputArg::Bezier)]
    pub output: OutputArg,
    /// Record wall-clock seconds in the history (breaks bit-identical reruns).
    #[arg(long)]
    pub record_wall_time: bool,
    /// Continue from a checkpoint up to --steps total.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated latent code for a single sample.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    pub latent: Option<String>,
    /// Evenly spaced values per latent dimension (k^d curves, d ≤ 3).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset directory; its tail is held out for the likelihood estimate.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed KDE bandwidth instead of grid selection.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 50)]
    pub lsc_lines: usize,
    #[arg(long, default_value_t = 20)]
    pub lsc_points: usize,
    /// Row labels of the comparison table.
    #[arg(long, default_value = "dataset")]
    pub example: String,
    #[arg(long, default_value = "bezier-gan")]
    pub model: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}
