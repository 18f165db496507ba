use crate::tensor::Shape4;

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("{context}: expected shape {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: Shape4,
        got: Shape4,
    },
    #[error("conv2d: input has {input} channels but kernel expects {expected}")]
    ChannelMismatch { input: usize, expected: usize },
    #[error("{context}: non-finite value at flat index {index}")]
    NonFinite { context: &'static str, index: usize },
    #[error("{context}: {quantity} {value} is not divisible by {divisor}")]
    NotDivisible {
        context: &'static str,
        quantity: &'static str,
        value: usize,
        divisor: usize,
    },
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}
