use crate::par::{self, Mode};
use crate::{Result, Scalar, Tensor4, TensorError};

const ELEM_CHUNK: usize = 1 << 14;

/// y = max(x, 0) elementwise.
pub fn relu_forward<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    relu_forward_m(x, Mode::auto())
}

/// Propagates `grad_a` where the stored activation `a` is positive and zeroes
/// it elsewhere; the subgradient at 0 is 0.
pub fn relu_backward<T: Scalar>(a: &Tensor4<T>, grad_a: &Tensor4<T>) -> Result<Tensor4<T>> {
    relu_backward_m(a, grad_a, Mode::auto())
}

/// Elementwise sum of two tensors of identical shape.
pub fn add<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    add_m(a, b, Mode::auto())
}

/// Rearranges (n, c, h, w) into (n, c/r^2, h*r, w*r):
/// y[n, o, r*i + di, r*j + dj] = x[n, o*r^2 + di*r + dj, i, j].
pub fn pixel_shuffle<T: Scalar>(x: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    pixel_shuffle_m(x, r, Mode::auto())
}

/// Inverse index map of [`pixel_shuffle`]; also the exact cotangent since the
/// operation is a permutation.
pub fn pixel_shuffle_backward<T: Scalar>(grad_y: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    pixel_shuffle_backward_m(grad_y, r, Mode::auto())
}

pub(crate) fn relu_forward_m<T: Scalar>(x: &Tensor4<T>, mode: Mode) -> Tensor4<T> {
    let mut y = x.clone();
    par::for_chunks_mut(mode, y.data_mut(), ELEM_CHUNK, |_, chunk| {
        for v in chunk.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
    });
    y
}

pub(crate) fn relu_backward_m<T: Scalar>(a: &Tensor4<T>, grad_a: &Tensor4<T>, mode: Mode) -> Result<Tensor4<T>> {
    if a.shape() != grad_a.shape() {
        return Err(TensorError::ShapeMismatch {
            context: "relu_backward",
            expected: a.shape(),
            got: grad_a.shape(),
        });
    }
    let mut out = grad_a.clone();
    let act = a.data();
    par::for_chunks_mut(mode, out.data_mut(), ELEM_CHUNK, |ci, chunk| {
        let base = ci * ELEM_CHUNK;
        for (t, v) in chunk.iter_mut().enumerate() {
            if !(act[base + t] > T::zero()) {
                *v = T::zero();
            }
        }
    });
    Ok(out)
}

pub(crate) fn add_m<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>, mode: Mode) -> Result<Tensor4<T>> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            context: "add",
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let mut out = a.clone();
    let rhs = b.data();
    par::for_chunks_mut(mode, out.data_mut(), ELEM_CHUNK, |ci, chunk| {
        let base = ci * ELEM_CHUNK;
        for (t, v) in chunk.iter_mut().enumerate() {
            *v += rhs[base + t];
        }
    });
    Ok(out)
}

pub(crate) fn pixel_shuffle_m<T: Scalar>(x: &Tensor4<T>, r: usize, mode: Mode) -> Result<Tensor4<T>> {
    if r == 0 {
        return Err(TensorError::Invalid {
            what: "pixel_shuffle factor",
            detail: "factor must be at least 1".into(),
        });
    }
    let s = x.shape();
    let rr = r * r;
    if s.c % rr != 0 {
        return Err(TensorError::NotDivisible {
            context: "pixel_shuffle",
            quantity: "channels",
            value: s.c,
            divisor: rr,
        });
    }
    let c_out = s.c / rr;
    let (rh, rw) = (s.h * r, s.w * r);
    let mut y = Tensor4::zeros(s.n, c_out, rh, rw);
    let src = x.data();
    par::for_chunks_mut(mode, y.data_mut(), rh * rw, |t, plane| {
        let ni = t / c_out;
        let oc = t % c_out;
        for di in 0..r {
            for dj in 0..r {
                let ic = oc * rr + di * r + dj;
                let sp = &src[(ni * s.c + ic) * s.h * s.w..][..s.h * s.w];
                for i in 0..s.h {
                    let srow = &sp[i * s.w..][..s.w];
                    let drow = &mut plane[(i * r + di) * rw + dj..][..(s.w - 1) * r + 1];
                    for j in 0..s.w {
                        drow[j * r] = srow[j];
                    }
                }
            }
        }
    });
    Ok(y)
}

pub(crate) fn pixel_shuffle_backward_m<T: Scalar>(grad_y: &Tensor4<T>, r: usize, mode: Mode) -> Result<Tensor4<T>> {
    if r == 0 {
        return Err(TensorError::Invalid {
            what: "pixel_shuffle factor",
            detail: "factor must be at least 1".into(),
        });
    }
    let s = grad_y.shape();
    if s.h % r != 0 {
        return Err(TensorError::NotDivisible {
            context: "pixel_shuffle_backward",
            quantity: "height",
            value: s.h,
            divisor: r,
        });
    }
    if s.w % r != 0 {
        return Err(TensorError::NotDivisible {
            context: "pixel_shuffle_backward",
            quantity: "width",
            value: s.w,
            divisor: r,
        });
    }
    let rr = r * r;
    let c_in = s.c * rr;
    let (h, w) = (s.h / r, s.w / r);
    let mut y = Tensor4::zeros(s.n, c_in, h, w);
    let src = grad_y.data();
    par::for_chunks_mut(mode, y.data_mut(), h * w, |t, plane| {
        let ni = t / c_in;
        let cc = t % c_in;
        let oc = cc / rr;
        let di = (cc % rr) / r;
        let dj = cc % r;
        let sp = &src[(ni * s.c + oc) * s.h * s.w..][..s.h * s.w];
        for i in 0..h {
            let srow = &sp[(i * r + di) * s.w + dj..][..(w - 1) * r + 1];
            let drow = &mut plane[i * w..][..w];
            for j in 0..w {
                drow[j] = srow[j * r];
            }
        }
    });
    Ok(y)
}
