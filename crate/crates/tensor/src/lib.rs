//! Deterministic NCHW tensor kernels with exact analytic gradients.
//!
//! Every operation is a pure function from inputs to freshly allocated
//! outputs. Accumulation order is fixed per output element, so results are
//! bit-identical across runs, thread counts, and the parallel/sequential
//! code paths. Floating-point sums are never reassociated and fused
//! multiply-add is never used.

mod conv;
mod error;
mod ops;
mod par;
mod scalar;
mod tensor;

pub use conv::{conv2d_backward, conv2d_forward, ConvGrads, ConvParams};
pub use error::TensorError;
pub use ops::{add, pixel_shuffle, pixel_shuffle_backward, relu_backward, relu_forward};
pub use scalar::Scalar;
pub use tensor::{Shape4, Tensor4};

pub type Result<T> = std::result::Result<T, TensorError>;

/// Sequential entry points. Bit-identical to the default (possibly parallel)
/// kernels; used by benchmarks and determinism tests.
pub mod seq {
    use super::par::Mode;
    use super::{ConvGrads, ConvParams, Result, Scalar, Tensor4};

    pub fn conv2d_forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
        super::conv::forward(x, p, Mode::Seq)
    }

    pub fn conv2d_backward<T: Scalar>(
        x: &Tensor4<T>,
        p: &ConvParams<T>,
        grad_y: &Tensor4<T>,
    ) -> Result<ConvGrads<T>> {
        super::conv::backward(x, p, grad_y, Mode::Seq)
    }

    pub fn relu_forward<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
        super::ops::relu_forward_m(x, Mode::Seq)
    }

    pub fn relu_backward<T: Scalar>(a: &Tensor4<T>, grad_a: &Tensor4<T>) -> Result<Tensor4<T>> {
        super::ops::relu_backward_m(a, grad_a, Mode::Seq)
    }

    pub fn add<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
        super::ops::add_m(a, b, Mode::Seq)
    }

    pub fn pixel_shuffle<T: Scalar>(x: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
        super::ops::pixel_shuffle_m(x, r, Mode::Seq)
    }

    pub fn pixel_shuffle_backward<T: Scalar>(grad_y: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
        super::ops::pixel_shuffle_backward_m(grad_y, r, Mode::Seq)
    }
}
