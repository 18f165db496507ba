use std::fmt;

use crate::{Result, Scalar, TensorError};

/// Dimensions of a [`Tensor4`] in NCHW order.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Shape4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape4 {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape4 { n, c, h, w }
    }

    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.c, self.h, self.w)
    }
}

/// Dense NCHW tensor with row-major layout: index (n, c, i, j) lives at
/// `((n * C + c) * H + i) * W + j`.
#[derive(Clone, PartialEq)]
pub struct Tensor4<T> {
    shape: Shape4,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    /// All dimensions must be at least 1.
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        let shape = Shape4::new(n, c, h, w);
        assert!(
            n >= 1 && c >= 1 && h >= 1 && w >= 1,
            "tensor dimensions must be positive, got {shape}"
        );
        Tensor4 {
            shape,
            data: vec![T::zero(); shape.len()],
        }
    }

    pub fn from_vec(shape: Shape4, data: Vec<T>) -> Result<Self> {
        if shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0 {
            return Err(TensorError::Invalid {
                what: "tensor shape",
                detail: format!("dimensions must be positive, got {shape}"),
            });
        }
        if data.len() != shape.len() {
            return Err(TensorError::Invalid {
                what: "tensor data",
                detail: format!(
                    "shape {shape} needs {} elements, got {}",
                    shape.len(),
                    data.len()
                ),
            });
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn full_like(other: &Self, value: T) -> Self {
        Tensor4 {
            shape: other.shape,
            data: vec![value; other.data.len()],
        }
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline(always)]
    pub fn offset(&self, n: usize, c: usize, i: usize, j: usize) -> usize {
        debug_assert!(n < self.shape.n && c < self.shape.c && i < self.shape.h && j < self.shape.w);
        ((n * self.shape.c + c) * self.shape.h + i) * self.shape.w + j
    }

    #[inline(always)]
    pub fn at(&self, n: usize, c: usize, i: usize, j: usize) -> T {
        self.data[self.offset(n, c, i, j)]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, n: usize, c: usize, i: usize, j: usize) -> &mut T {
        let k = self.offset(n, c, i, j);
        &mut self.data[k]
    }

    /// Flat index of the first non-finite element, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor4<U> {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor4<U> {
        self.map(|v| U::from_f64(v.to_f64()))
    }
}

impl<T> fmt::Debug for Tensor4<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor4 {{ shape: {}, len: {} }}", self.shape, self.data.len())
    }
}
