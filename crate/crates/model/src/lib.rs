//! Model graphs for the super-resolution network family: configuration,
//! parameter storage, forward and backward passes, and checkpoint I/O.

mod config;
mod graph;
mod io;
mod store;

pub use config::{Convention, ModelConfig, Variant, SUPPORTED_SCALES};
pub use graph::{
    build_model, ieeb_forward, irb_forward, model_forward, rb_forward, Activation, IeebTrace,
    LayerExec, ModelGraph, ModelTrace, TraceLevel,
};
pub use io::{load_checkpoint, load_values, save_checkpoint, save_values, ValueRecord};
pub use store::{ConvLayer, ParamStore, ParamView};

use lesr_tensor::TensorError;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("unsupported scale {scale}; supported scales are 2, 3, and 4")]
    UnsupportedScale { scale: u32 },

    #[error("trunk depth must be odd, got {depth}")]
    EvenDepth { depth: usize },

    #[error(
        "compact heads at scale {scale} need channels divisible by {divisor}, got {channels}"
    )]
    CompactDivisibility {
        scale: u32,
        channels: usize,
        divisor: usize,
    },

    #[error("the multi-scale variant shares one tail across scales, which compact heads cannot feed")]
    CompactMultiScale,

    #[error("model has no head for scale {scale}")]
    MissingHead { scale: u32 },

    #[error("model input must have 3 channels, got {got}")]
    InputChannels { got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: String, detail: String },

    #[error("checkpoint does not match the model: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}
