use std::fmt;

use lesr_imageio::ImageError;
use lesr_metrics::MetricsError;
use lesr_model::ModelError;
use lesr_tensor::TensorError;
use lesr_train::TrainError;

/// Exit codes: 2 for misuse of flags or configuration, 3 for missing or
/// malformed data, 4 for numeric failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        match e {
            ImageError::InvalidScales(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnsupportedScale { .. }
            | ModelError::EvenDepth { .. }
            | ModelError::CompactDivisibility { .. }
            | ModelError::CompactMultiScale
            | ModelError::MissingHead { .. }
            | ModelError::InputChannels { .. }
            | ModelError::Config(_) => CliError::Usage(e.to_string()),
            ModelError::Tensor(TensorError::NonFinite { .. }) => CliError::Numeric(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            TrainError::NonFinite { ref checkpoint, .. } => {
                let mut msg = e.to_string();
                if let Some(p) = checkpoint {
                    msg.push_str(&format!("; diagnostic checkpoint at {}", p.display()));
                }
                CliError::Numeric(msg)
            }
            TrainError::Model(m) => m.into(),
            TrainError::Image(i) => i.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Invalid(_) => CliError::Usage(e.to_string()),
            MetricsError::Model(m) => m.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
