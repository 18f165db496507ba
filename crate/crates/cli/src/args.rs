use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Every tunable flag has a built-in default, may be supplied by a JSON
/// config file whose keys mirror the long flag names, and is overridden by
/// an explicit command-line flag.
#[derive(Parser)]
#[command(
    name = "lesr",
    version,
    about = "Lightweight single-image super-resolution: dataset preparation, training, \
             evaluation, inference, and model accounting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Crop HR images, synthesize bicubic LR copies, and write a manifest
    Prepare(PrepareArgs),
    /// Optimize a model on a prepared dataset
    Train(TrainArgs),
    /// Score a checkpoint (or plain bicubic upscaling) against a dataset
    Eval(EvalArgs),
    /// Upscale one PNG with a trained checkpoint
    Infer(InferArgs),
    /// Report parameter counts and per-layer operation counts
    Count(CountArgs),
    /// Measure median forward-pass wall time over input sizes
    Time(TimeArgs),
    /// Compare analytic gradients against finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// JSON config file; keys mirror long flag names, explicit flags win
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random draw made by the subcommand [default: 0]
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct ModelArgs {
    /// Model family: lesrcnn, lesrcnn-s, hn, or sn [default: lesrcnn]
    #[arg(long, value_name = "NAME")]
    pub variant: Option<String>,

    /// Upscaling factor to build or run [default: 2]
    #[arg(long, value_name = "N")]
    pub scale: Option<u32>,

    /// Head scales for the multi-scale variant, comma-separated [default: 2,3,4]
    #[arg(long, value_name = "LIST")]
    pub scales: Option<String>,

    /// Sub-pixel head convention: standard or compact [default: standard]
    #[arg(long, value_name = "NAME")]
    pub convention: Option<String>,

    /// Trunk width in feature maps [default: 64]
    #[arg(long, value_name = "N")]
    pub channels: Option<usize>,

    /// Trunk depth; must be odd [default: 17]
    #[arg(long, value_name = "N")]
    pub ieeb_depth: Option<usize>,

    /// Refinement tail depth for the full variants [default: 5]
    #[arg(long, value_name = "N")]
    pub irb_depth: Option<usize>,
}

#[derive(Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Directory of high-resolution source PNGs [default: .]
    #[arg(long, value_name = "DIR")]
    pub hr_dir: Option<PathBuf>,

    /// Scales to synthesize LR images for, comma-separated [default: 2,3,4]
    #[arg(long, value_name = "LIST")]
    pub scales: Option<String>,

    /// Output dataset directory [default: dataset]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Prepared dataset directory (or a plain directory of PNGs) [default: dataset]
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,

    /// Output directory for checkpoints and the loss log [default: runs]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Checkpoint to resume from; replays the original trajectory [default: none]
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,

    /// Patches per optimization step [default: 16]
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,

    /// Initial learning rate, halved every --halve-every steps [default: 1e-4]
    #[arg(long, value_name = "F")]
    pub lr0: Option<f64>,

    /// Adam first-moment decay [default: 0.9]
    #[arg(long, value_name = "F")]
    pub beta1: Option<f64>,

    /// Adam second-moment decay [default: 0.999]
    #[arg(long, value_name = "F")]
    pub beta2: Option<f64>,

    /// Adam denominator fuzz [default: 1e-8]
    #[arg(long, value_name = "F")]
    pub epsilon: Option<f64>,

    /// Total optimization steps [default: 5000]
    #[arg(long, value_name = "N")]
    pub total_steps: Option<u64>,

    /// Steps between learning-rate halvings [default: 2000]
    #[arg(long, value_name = "N")]
    pub halve_every: Option<u64>,

    /// Square HR patch side in pixels [default: 64]
    #[arg(long, value_name = "N")]
    pub patch: Option<usize>,

    /// Steps between periodic checkpoints [default: 1000]
    #[arg(long, value_name = "N")]
    pub checkpoint_every: Option<u64>,

    /// Random flips and quarter-turns on sampled patches [default: true]
    #[arg(long, value_name = "BOOL")]
    pub augment: Option<bool>,

    /// Steps between progress lines on stdout [default: 100]
    #[arg(long, value_name = "N")]
    pub print_every: Option<u64>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Prepared dataset directory with a manifest [default: dataset]
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,

    /// Checkpoint to score; omit to score bicubic upscaling alone [default: none]
    #[arg(long, value_name = "PATH")]
    pub ckpt: Option<PathBuf>,

    /// Output CSV path [default: eval.csv]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Score unquantized luma instead of 8-bit levels [default: false]
    #[arg(long, value_name = "BOOL")]
    pub float_y: Option<bool>,
}

#[derive(Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Checkpoint to load [default: model.ckpt]
    #[arg(long, value_name = "PATH")]
    pub ckpt: Option<PathBuf>,

    /// Low-resolution input PNG [default: input.png]
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Output PNG path [default: sr.png]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Low-resolution input size HxW for operation counts [default: 64x64]
    #[arg(long, value_name = "HxW")]
    pub size: Option<String>,

    /// Also write the operation-count table as CSV [default: none]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct TimeArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Input sizes to measure, comma-separated HxW [default: 32x32,64x64,96x96]
    #[arg(long, value_name = "LIST")]
    pub sizes: Option<String>,

    /// Timed passes per size after one warmup [default: 5]
    #[arg(long, value_name = "N")]
    pub repeats: Option<usize>,

    /// Also write the timing table as CSV [default: none]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Low-resolution input size HxW [default: 8x8]
    #[arg(long, value_name = "HxW")]
    pub size: Option<String>,

    /// Maximum tolerated relative error [default: 1e-4]
    #[arg(long, value_name = "F")]
    pub tolerance: Option<f64>,
}
