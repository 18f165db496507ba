//! Training for the super-resolution models: patch sampling with dihedral
//! augmentation, the halved-learning-rate Adam schedule, the optimization
//! loop with checkpoint/resume support, and finite-difference gradient
//! checking.

mod config;
mod convert;
mod gradcheck;
mod loss;
mod optim;
mod run;
mod sample;

pub use config::TrainConfig;
pub use convert::{image_to_tensor, images_to_batch, quantize_unit, tensor_to_images};
pub use gradcheck::{
    collect_analytic_grads, compare_to_finite_differences, gradcheck, gradcheck_input,
    gradcheck_with, jitter_biases, GradcheckReport, GradcheckRow,
};
pub use loss::mse_loss;
pub use optim::{adam_step, load_adam_state, lr_at, save_adam_state, sidecar_path, AdamState};
pub use run::{checkpoint_name, train, LossRow, TrainOptions};
pub use sample::{sample_batch, step_rng, PatchBatch, TrainSet, Transform};

use std::path::PathBuf;

use lesr_imageio::ImageError;
use lesr_model::ModelError;

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("optimizer stepped with stale gradients; run a backward pass first")]
    StaleGradients,

    #[error("optimizer state does not match the model: {0}")]
    StateMismatch(String),

    #[error("no usable training images: {0}")]
    EmptyDataset(String),

    #[error("non-finite loss at training step {step}")]
    NonFinite {
        step: u64,
        /// Diagnostic checkpoint written just before aborting, when a
        /// checkpoint directory was configured.
        checkpoint: Option<PathBuf>,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Image(#[from] ImageError),
}
