//! Same-padding stride-1 convolution, forward and backward.
//!
//! Per output element the accumulation order is fixed: forward adds the bias
//! first, then weight taps in (channel, row, column) order; the input
//! gradient adds taps in (output channel, row, column) order; weight and
//! bias gradients form one partial sum per sample in pixel order and reduce
//! the partials in sample order. Padding contributes explicit zero terms in
//! the forward pass. Multiplications and additions stay separate so the
//! rounding sequence is reproducible everywhere.

use crate::par::{self, Mode};
use crate::{Result, Scalar, Shape4, Tensor4, TensorError};

/// Weights and bias of one convolution layer. The kernel must be square with
/// odd side; padding is fixed at `k / 2` so spatial dimensions are preserved.
#[derive(Clone, Debug)]
pub struct ConvParams<T> {
    weight: Tensor4<T>,
    bias: Vec<T>,
    padding: usize,
}

impl<T: Scalar> ConvParams<T> {
    /// `weight` has shape (c_out, c_in, k, k); `bias` has c_out entries.
    pub fn new(weight: Tensor4<T>, bias: Vec<T>) -> Result<Self> {
        let s = weight.shape();
        if s.h != s.w {
            return Err(TensorError::Invalid {
                what: "conv kernel",
                detail: format!("kernel must be square, got {}x{}", s.h, s.w),
            });
        }
        if s.h % 2 == 0 {
            return Err(TensorError::Invalid {
                what: "conv kernel",
                detail: format!("kernel side must be odd for same padding, got {}", s.h),
            });
        }
        if bias.len() != s.n {
            return Err(TensorError::Invalid {
                what: "conv bias",
                detail: format!("expected {} entries, got {}", s.n, bias.len()),
            });
        }
        Ok(ConvParams {
            padding: s.h / 2,
            weight,
            bias,
        })
    }

    pub fn c_out(&self) -> usize {
        self.weight.shape().n
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape().c
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape().h
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn weight(&self) -> &Tensor4<T> {
        &self.weight
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    /// Mutable view of the weight values; the shape stays fixed.
    pub fn weight_values_mut(&mut self) -> &mut [T] {
        self.weight.data_mut()
    }

    pub fn bias_values_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    /// Disjoint mutable views of weight and bias values.
    pub fn values_mut(&mut self) -> (&mut [T], &mut [T]) {
        (self.weight.data_mut(), &mut self.bias)
    }
}

/// Gradients produced by [`conv2d_backward`].
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub x: Tensor4<T>,
    pub weight: Tensor4<T>,
    pub bias: Vec<T>,
}

/// y[n,o,i,j] = bias[o] + sum_{c,u,v} w[o,c,u,v] * xp[n,c,i+u,j+v] over the
/// zero-padded input. Output spatial size equals the input.
pub fn conv2d_forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
    forward(x, p, Mode::auto())
}

/// Exact cotangents of [`conv2d_forward`] for input, weight, and bias.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_y: &Tensor4<T>,
) -> Result<ConvGrads<T>> {
    backward(x, p, grad_y, Mode::auto())
}

pub(crate) fn forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>, mode: Mode) -> Result<Tensor4<T>> {
    let xs = x.shape();
    let c_in = p.c_in();
    let c_out = p.c_out();
    if xs.c != c_in {
        return Err(TensorError::ChannelMismatch {
            input: xs.c,
            expected: c_in,
        });
    }
    if let Some(index) = x.first_non_finite() {
        return Err(TensorError::NonFinite {
            context: "conv2d input",
            index,
        });
    }
    if let Some(index) = p.weight.first_non_finite() {
        return Err(TensorError::NonFinite {
            context: "conv2d weight",
            index,
        });
    }
    if let Some(index) = p.bias.iter().position(|v| !v.is_finite()) {
        return Err(TensorError::NonFinite {
            context: "conv2d bias",
            index,
        });
    }

    let (n, h, w) = (xs.n, xs.h, xs.w);
    let k = p.kernel();
    let pad = p.padding();
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let storage;
    let xp: &[T] = if pad == 0 {
        x.data()
    } else {
        storage = pad_nchw(x, pad);
        &storage
    };

    let mut y = Tensor4::zeros(n, c_out, h, w);
    let weights = p.weight.data();
    let bias = &p.bias;
    let kk = k * k;
    par::for_chunks_mut(mode, y.data_mut(), h * w, |t, plane| {
        let ni = t / c_out;
        let o = t % c_out;
        let b = bias[o];
        for v in plane.iter_mut() {
            *v = b;
        }
        let wrow = &weights[o * c_in * kk..][..c_in * kk];
        for c in 0..c_in {
            let xc = &xp[(ni * c_in + c) * ph * pw..][..ph * pw];
            let wk = &wrow[c * kk..][..kk];
            match k {
                1 => accum_k1(plane, xc, wk[0]),
                3 => accum_k3(plane, xc, wk, h, w, pw),
                _ => accum_gen(plane, xc, wk, k, h, w, pw),
            }
        }
    });
    Ok(y)
}

pub(crate) fn backward<T: Scalar>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_y: &Tensor4<T>,
    mode: Mode,
) -> Result<ConvGrads<T>> {
    let xs = x.shape();
    let c_in = p.c_in();
    let c_out = p.c_out();
    if xs.c != c_in {
        return Err(TensorError::ChannelMismatch {
            input: xs.c,
            expected: c_in,
        });
    }
    let expected = Shape4::new(xs.n, c_out, xs.h, xs.w);
    if grad_y.shape() != expected {
        return Err(TensorError::ShapeMismatch {
            context: "conv2d_backward cotangent",
            expected,
            got: grad_y.shape(),
        });
    }

    let (n, h, w) = (xs.n, xs.h, xs.w);
    let k = p.kernel();
    let kk = k * k;
    let pad = p.padding();
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let storage;
    let xp: &[T] = if pad == 0 {
        x.data()
    } else {
        storage = pad_nchw(x, pad);
        &storage
    };
    let dy = grad_y.data();
    let weights = p.weight.data();
    let cols_len = c_in * kk;

    // Weight and bias gradients: one partial row per (sample, output channel),
    // the last entry holding the bias part, reduced over samples afterwards.
    let mut partial = vec![T::zero(); n * c_out * (cols_len + 1)];
    par::for_chunks_mut(mode, &mut partial, c_out * (cols_len + 1), |ni, part| {
        let mut cols = vec![T::zero(); h * w * cols_len];
        let xpn = &xp[ni * c_in * ph * pw..][..c_in * ph * pw];
        for c in 0..c_in {
            let xc = &xpn[c * ph * pw..][..ph * pw];
            for u in 0..k {
                for v in 0..k {
                    let col = (c * k + u) * k + v;
                    for i in 0..h {
                        let src = &xc[(i + u) * pw + v..][..w];
                        for j in 0..w {
                            cols[(i * w + j) * cols_len + col] = src[j];
                        }
                    }
                }
            }
        }
        for o in 0..c_out {
            let prow = &mut part[o * (cols_len + 1)..][..cols_len + 1];
            let (acc, acc_b) = prow.split_at_mut(cols_len);
            let dyp = &dy[(ni * c_out + o) * h * w..][..h * w];
            for (ij, &g) in dyp.iter().enumerate() {
                let crow = &cols[ij * cols_len..][..cols_len];
                for (a, &cv) in acc.iter_mut().zip(crow) {
                    *a += g * cv;
                }
                acc_b[0] += g;
            }
        }
    });
    let mut grad_w = Tensor4::zeros(c_out, c_in, k, k);
    let mut grad_b = vec![T::zero(); c_out];
    let gw = grad_w.data_mut();
    for ni in 0..n {
        let base = ni * c_out * (cols_len + 1);
        for o in 0..c_out {
            let prow = &partial[base + o * (cols_len + 1)..][..cols_len + 1];
            let dst = &mut gw[o * cols_len..][..cols_len];
            for (d, &s) in dst.iter_mut().zip(&prow[..cols_len]) {
                *d += s;
            }
            grad_b[o] += prow[cols_len];
        }
    }
    drop(partial);

    // Input gradient: scatter each output-channel cotangent through the
    // kernel into a padded scratch plane, then crop the interior.
    let mut grad_x = Tensor4::zeros(n, c_in, h, w);
    par::for_chunks_mut(mode, grad_x.data_mut(), h * w, |t, plane| {
        let ni = t / c_in;
        let c = t % c_in;
        let mut dxp = vec![T::zero(); ph * pw];
        for o in 0..c_out {
            let dyp = &dy[(ni * c_out + o) * h * w..][..h * w];
            let wk = &weights[(o * c_in + c) * kk..][..kk];
            scatter_add(&mut dxp, dyp, wk, k, h, w, pw);
        }
        for i in 0..h {
            let src = &dxp[(i + pad) * pw + pad..][..w];
            plane[i * w..][..w].copy_from_slice(src);
        }
    });

    Ok(ConvGrads {
        x: grad_x,
        weight: grad_w,
        bias: grad_b,
    })
}

fn pad_nchw<T: Scalar>(x: &Tensor4<T>, pad: usize) -> Vec<T> {
    let s = x.shape();
    let (h, w) = (s.h, s.w);
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut out = vec![T::zero(); s.n * s.c * ph * pw];
    let src = x.data();
    for plane in 0..s.n * s.c {
        let sp = &src[plane * h * w..][..h * w];
        let dp = &mut out[plane * ph * pw..][..ph * pw];
        for i in 0..h {
            dp[(i + pad) * pw + pad..][..w].copy_from_slice(&sp[i * w..][..w]);
        }
    }
    out
}

#[inline]
fn accum_k1<T: Scalar>(plane: &mut [T], xc: &[T], w0: T) {
    for (d, &s) in plane.iter_mut().zip(xc) {
        *d += w0 * s;
    }
}

#[inline]
fn accum_k3<T: Scalar>(plane: &mut [T], xc: &[T], wk: &[T], h: usize, w: usize, pw: usize) {
    let (w00, w01, w02) = (wk[0], wk[1], wk[2]);
    let (w10, w11, w12) = (wk[3], wk[4], wk[5]);
    let (w20, w21, w22) = (wk[6], wk[7], wk[8]);
    for i in 0..h {
        let dst = &mut plane[i * w..][..w];
        let r0 = &xc[i * pw..][..pw];
        let r1 = &xc[(i + 1) * pw..][..pw];
        let r2 = &xc[(i + 2) * pw..][..pw];
        for j in 0..w {
            dst[j] = dst[j]
                + w00 * r0[j]
                + w01 * r0[j + 1]
                + w02 * r0[j + 2]
                + w10 * r1[j]
                + w11 * r1[j + 1]
                + w12 * r1[j + 2]
                + w20 * r2[j]
                + w21 * r2[j + 1]
                + w22 * r2[j + 2];
        }
    }
}

#[inline]
fn accum_gen<T: Scalar>(plane: &mut [T], xc: &[T], wk: &[T], k: usize, h: usize, w: usize, pw: usize) {
    for i in 0..h {
        let dst = &mut plane[i * w..][..w];
        for u in 0..k {
            let r = &xc[(i + u) * pw..][..pw];
            for v in 0..k {
                let wv = wk[u * k + v];
                for j in 0..w {
                    dst[j] += wv * r[j + v];
                }
            }
        }
    }
}

/// dxp[i+u, j+v] += w[u,v] * dy[i, j] for all taps, visiting each target
/// element's contributions in (u, v) order.
fn scatter_add<T: Scalar>(dxp: &mut [T], dyp: &[T], wk: &[T], k: usize, h: usize, w: usize, pw: usize) {
    for u in 0..k {
        for i in 0..h {
            let dr = &mut dxp[(i + u) * pw..][..pw];
            let sr = &dyp[i * w..][..w];
            if k == 3 && w >= 3 {
                let (w0, w1, w2) = (wk[u * 3], wk[u * 3 + 1], wk[u * 3 + 2]);
                dr[0] = dr[0] + w0 * sr[0];
                dr[1] = dr[1] + w0 * sr[1] + w1 * sr[0];
                for m in 2..w {
                    dr[m] = dr[m] + w0 * sr[m] + w1 * sr[m - 1] + w2 * sr[m - 2];
                }
                dr[w] = dr[w] + w1 * sr[w - 1] + w2 * sr[w - 2];
                dr[w + 1] = dr[w + 1] + w2 * sr[w - 1];
            } else {
                for (m, d) in dr.iter_mut().enumerate() {
                    let v_lo = (m + 1).saturating_sub(w);
                    let v_hi = (m + 1).min(k);
                    for v in v_lo..v_hi {
                        *d += wk[u * k + v] * sr[m - v];
                    }
                }
            }
        }
    }
}
