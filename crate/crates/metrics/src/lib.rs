//! Reconstruction quality metrics (Y-channel PSNR/SSIM with the standard
//! border-shave protocol), parameter and multiply-accumulate accounting, and
//! a wall-clock inference timing harness.

mod complexity;
mod quality;
mod report;
mod timing;

pub use complexity::{count_flops, count_params, ComplexityReport, LayerCost};
pub use quality::{
    eval_y_channel, eval_y_channel_float, psnr, quantize_plane, shave, ssim, PSNR_CAP,
};
pub use report::{EvalReport, EvalRow};
pub use timing::{time_inference, TimingRow, TimingTable};

use lesr_model::ModelError;

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} is {h}x{w}, smaller than the {min}-pixel minimum{context}")]
    TooSmall {
        what: &'static str,
        h: usize,
        w: usize,
        min: usize,
        context: String,
    },

    #[error("invalid metric argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("report output: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}
