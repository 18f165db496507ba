use lesr_tensor::{conv2d_backward, conv2d_forward, ConvParams, Scalar, Shape4, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-from-the-definition reference implementations. They materialize
/// the zero-padded input and accumulate in the same documented order as the
/// kernels, so results must match bit for bit.
mod oracle {
    use lesr_tensor::{ConvParams, Scalar, Tensor4};

    pub fn padded<T: Scalar>(x: &Tensor4<T>, pad: usize) -> (Vec<T>, usize, usize) {
        let s = x.shape();
        let (ph, pw) = (s.h + 2 * pad, s.w + 2 * pad);
        let mut xp = vec![T::zero(); s.n * s.c * ph * pw];
        for n in 0..s.n {
            for c in 0..s.c {
                for i in 0..s.h {
                    for j in 0..s.w {
                        xp[((n * s.c + c) * ph + i + pad) * pw + j + pad] = x.at(n, c, i, j);
                    }
                }
            }
        }
        (xp, ph, pw)
    }

    pub fn forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Tensor4<T> {
        let s = x.shape();
        let (k, pad) = (p.kernel(), p.padding());
        let (xp, ph, pw) = padded(x, pad);
        let w = p.weight();
        let mut y = Tensor4::zeros(s.n, p.c_out(), s.h, s.w);
        for n in 0..s.n {
            for o in 0..p.c_out() {
                for i in 0..s.h {
                    for j in 0..s.w {
                        let mut acc = p.bias()[o];
                        for c in 0..s.c {
                            for u in 0..k {
                                for v in 0..k {
                                    acc = acc
                                        + w.at(o, c, u, v)
                                            * xp[((n * s.c + c) * ph + i + u) * pw + j + v];
                                }
                            }
                        }
                        *y.at_mut(n, o, i, j) = acc;
                    }
                }
            }
        }
        y
    }

    pub fn backward<T: Scalar>(
        x: &Tensor4<T>,
        p: &ConvParams<T>,
        gy: &Tensor4<T>,
    ) -> (Tensor4<T>, Tensor4<T>, Vec<T>) {
        let s = x.shape();
        let (k, pad) = (p.kernel(), p.padding());
        let (c_in, c_out) = (p.c_in(), p.c_out());
        let w = p.weight();
        let (xp, ph, pw) = padded(x, pad);

        let mut gx = Tensor4::zeros(s.n, c_in, s.h, s.w);
        for n in 0..s.n {
            for c in 0..c_in {
                for a in 0..s.h {
                    for b in 0..s.w {
                        let mut acc = T::zero();
                        for o in 0..c_out {
                            for u in 0..k {
                                for v in 0..k {
                                    let ii = a as isize + pad as isize - u as isize;
                                    let jj = b as isize + pad as isize - v as isize;
                                    if ii >= 0 && ii < s.h as isize && jj >= 0 && jj < s.w as isize
                                    {
                                        acc = acc
                                            + w.at(o, c, u, v)
                                                * gy.at(n, o, ii as usize, jj as usize);
                                    }
                                }
                            }
                        }
                        *gx.at_mut(n, c, a, b) = acc;
                    }
                }
            }
        }

        let mut gw = Tensor4::zeros(c_out, c_in, k, k);
        for o in 0..c_out {
            for c in 0..c_in {
                for u in 0..k {
                    for v in 0..k {
                        let mut total = T::zero();
                        for n in 0..s.n {
                            let mut part = T::zero();
                            for i in 0..s.h {
                                for j in 0..s.w {
                                    part = part
                                        + gy.at(n, o, i, j)
                                            * xp[((n * c_in + c) * ph + i + u) * pw + j + v];
                                }
                            }
                            total = total + part;
                        }
                        *gw.at_mut(o, c, u, v) = total;
                    }
                }
            }
        }

        let mut gb = vec![T::zero(); c_out];
        for o in 0..c_out {
            for n in 0..s.n {
                let mut part = T::zero();
                for i in 0..s.h {
                    for j in 0..s.w {
                        part = part + gy.at(n, o, i, j);
                    }
                }
                gb[o] = gb[o] + part;
            }
        }

        (gx, gw, gb)
    }
}

fn tensor_from(shape: (usize, usize, usize, usize), vals: &[f32]) -> Tensor4<f32> {
    Tensor4::from_vec(Shape4::new(shape.0, shape.1, shape.2, shape.3), vals.to_vec()).unwrap()
}

fn rand_tensor<T: Scalar>(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4<T> {
    let data = (0..n * c * h * w)
        .map(|_| T::from_f64(rng.random_range(-2.0..2.0)))
        .collect();
    Tensor4::from_vec(Shape4::new(n, c, h, w), data).unwrap()
}

fn rand_params<T: Scalar>(rng: &mut ChaCha8Rng, c_out: usize, c_in: usize, k: usize) -> ConvParams<T> {
    let w = rand_tensor(rng, c_out, c_in, k, k);
    let b = (0..c_out).map(|_| T::from_f64(rng.random_range(-1.0..1.0))).collect();
    ConvParams::new(w, b).unwrap()
}

fn bits(t: &Tensor4<f32>) -> Vec<u32> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn box_kernel_sums_neighborhoods() {
    let x = tensor_from((1, 1, 3, 3), &[1.0; 9]);
    let p = ConvParams::new(tensor_from((1, 1, 3, 3), &[1.0; 9]), vec![0.0]).unwrap();
    let y = conv2d_forward(&x, &p).unwrap();
    let expected = [4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0];
    assert_eq!(y.data(), &expected);
}

#[test]
fn identity_1x1_kernel_copies_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Tensor4<f32> = rand_tensor(&mut rng, 2, 3, 4, 5);
    let mut w = Tensor4::zeros(3, 3, 1, 1);
    for c in 0..3 {
        *w.at_mut(c, c, 0, 0) = 1.0;
    }
    let p = ConvParams::new(w, vec![0.0; 3]).unwrap();
    let y = conv2d_forward(&x, &p).unwrap();
    assert_eq!(bits(&y), bits(&x));
}

#[test]
fn scalar_case_matches_chain_rule() {
    let x = tensor_from((1, 1, 1, 1), &[3.0]);
    let p = ConvParams::new(tensor_from((1, 1, 1, 1), &[2.0]), vec![1.0]).unwrap();
    let y = conv2d_forward(&x, &p).unwrap();
    assert_eq!(y.data(), &[7.0]);
    let gy = tensor_from((1, 1, 1, 1), &[1.0]);
    let g = conv2d_backward(&x, &p, &gy).unwrap();
    assert_eq!(g.x.data(), &[2.0]);
    assert_eq!(g.weight.data(), &[3.0]);
    assert_eq!(g.bias, vec![1.0]);
}

#[test]
fn zero_cotangent_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Tensor4<f32> = rand_tensor(&mut rng, 1, 2, 4, 4);
    let p = rand_params(&mut rng, 3, 2, 3);
    let gy = Tensor4::zeros(1, 3, 4, 4);
    let g = conv2d_backward(&x, &p, &gy).unwrap();
    assert!(g.x.data().iter().all(|&v| v == 0.0));
    assert!(g.weight.data().iter().all(|&v| v == 0.0));
    assert!(g.bias.iter().all(|&v| v == 0.0));
}

#[test]
fn forward_matches_oracle_bitwise_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..120 {
        let n = rng.random_range(1..=2);
        let c_in = rng.random_range(1..=4);
        let c_out = rng.random_range(1..=4);
        let k = if rng.random_range(0..2) == 0 { 1 } else { 3 };
        let h = rng.random_range(1..=7);
        let w = rng.random_range(1..=7);
        let x: Tensor4<f32> = rand_tensor(&mut rng, n, c_in, h, w);
        let p = rand_params(&mut rng, c_out, c_in, k);
        let got = conv2d_forward(&x, &p).unwrap();
        let want = oracle::forward(&x, &p);
        assert_eq!(bits(&got), bits(&want), "case {case}: n={n} ci={c_in} co={c_out} k={k} {h}x{w}");
    }
}

#[test]
fn backward_matches_oracle_bitwise_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..120 {
        let n = rng.random_range(1..=2);
        let c_in = rng.random_range(1..=4);
        let c_out = rng.random_range(1..=4);
        let k = if rng.random_range(0..2) == 0 { 1 } else { 3 };
        let h = rng.random_range(1..=7);
        let w = rng.random_range(1..=7);
        let x: Tensor4<f32> = rand_tensor(&mut rng, n, c_in, h, w);
        let p = rand_params(&mut rng, c_out, c_in, k);
        let gy: Tensor4<f32> = rand_tensor(&mut rng, n, c_out, h, w);
        let got = conv2d_backward(&x, &p, &gy).unwrap();
        let (ox, ow, ob) = oracle::backward(&x, &p, &gy);
        assert_eq!(bits(&got.x), bits(&ox), "grad_x case {case}");
        assert_eq!(bits(&got.weight), bits(&ow), "grad_w case {case}");
        let got_b: Vec<u32> = got.bias.iter().map(|v| v.to_bits()).collect();
        let want_b: Vec<u32> = ob.iter().map(|v| v.to_bits()).collect();
        assert_eq!(got_b, want_b, "grad_b case {case}");
    }
}

#[test]
fn gradients_match_finite_differences_in_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Tensor4<f64> = rand_tensor(&mut rng, 2, 2, 5, 4);
    let p: ConvParams<f64> = rand_params(&mut rng, 3, 2, 3);
    let gy: Tensor4<f64> = rand_tensor(&mut rng, 2, 3, 5, 4);
    let g = conv2d_backward(&x, &p, &gy).unwrap();

    // Convolution is linear in every argument, so central differences are
    // exact up to rounding.
    let eps = 1e-3;
    let loss = |x: &Tensor4<f64>, p: &ConvParams<f64>| -> f64 {
        let y = conv2d_forward(x, p).unwrap();
        y.data().iter().zip(gy.data()).map(|(a, b)| a * b).sum()
    };

    let mut checked = 0;
    for idx in [0usize, 7, 31, x.len() - 1] {
        let mut xp = x.clone();
        xp.data_mut()[idx] += eps;
        let mut xm = x.clone();
        xm.data_mut()[idx] -= eps;
        let fd = (loss(&xp, &p) - loss(&xm, &p)) / (2.0 * eps);
        let an = g.x.data()[idx];
        assert!((fd - an).abs() <= 1e-7 * (1.0 + an.abs()), "grad_x[{idx}]: fd={fd} an={an}");
        checked += 1;
    }
    for idx in [0usize, 5, 26, 3 * 2 * 9 - 1] {
        let mut pp = p.clone();
        pp.weight_values_mut()[idx] += eps;
        let mut pm = p.clone();
        pm.weight_values_mut()[idx] -= eps;
        let fd = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * eps);
        let an = g.weight.data()[idx];
        assert!((fd - an).abs() <= 1e-7 * (1.0 + an.abs()), "grad_w[{idx}]: fd={fd} an={an}");
        checked += 1;
    }
    for idx in 0..3 {
        let mut pp = p.clone();
        pp.bias_values_mut()[idx] += eps;
        let mut pm = p.clone();
        pm.bias_values_mut()[idx] -= eps;
        let fd = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * eps);
        let an = g.bias[idx];
        assert!((fd - an).abs() <= 1e-7 * (1.0 + an.abs()), "grad_b[{idx}]: fd={fd} an={an}");
        checked += 1;
    }
    assert_eq!(checked, 11);
}

#[test]
fn backward_matches_finite_differences_on_many_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eps = 1e-3;
    for case in 0..100 {
        let n = rng.random_range(1..=2);
        let c_in = rng.random_range(1..=3);
        let c_out = rng.random_range(1..=3);
        let k = if case % 2 == 0 { 1 } else { 3 };
        let h = rng.random_range(1..=5);
        let w = rng.random_range(1..=5);
        let x: Tensor4<f64> = rand_tensor(&mut rng, n, c_in, h, w);
        let p: ConvParams<f64> = rand_params(&mut rng, c_out, c_in, k);
        let gy: Tensor4<f64> = rand_tensor(&mut rng, n, c_out, h, w);
        let g = conv2d_backward(&x, &p, &gy).unwrap();
        let loss = |x: &Tensor4<f64>, p: &ConvParams<f64>| -> f64 {
            let y = conv2d_forward(x, p).unwrap();
            y.data().iter().zip(gy.data()).map(|(a, b)| a * b).sum()
        };
        let xi = rng.random_range(0..x.len());
        let mut xp = x.clone();
        xp.data_mut()[xi] += eps;
        let mut xm = x.clone();
        xm.data_mut()[xi] -= eps;
        let fd = (loss(&xp, &p) - loss(&xm, &p)) / (2.0 * eps);
        let an = g.x.data()[xi];
        assert!(
            (fd - an).abs() <= 1e-4 * (1.0 + an.abs()),
            "case {case} grad_x[{xi}]: fd={fd} an={an}"
        );
        let wi = rng.random_range(0..c_out * c_in * k * k);
        let mut pp = p.clone();
        pp.weight_values_mut()[wi] += eps;
        let mut pm = p.clone();
        pm.weight_values_mut()[wi] -= eps;
        let fd = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * eps);
        let an = g.weight.data()[wi];
        assert!(
            (fd - an).abs() <= 1e-4 * (1.0 + an.abs()),
            "case {case} grad_w[{wi}]: fd={fd} an={an}"
        );
    }
}

#[test]
fn channel_mismatch_is_rejected() {
    let x: Tensor4<f32> = Tensor4::zeros(1, 2, 4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = rand_params::<f32>(&mut rng, 3, 4, 3);
    let err = conv2d_forward(&x, &p).unwrap_err();
    assert!(err.to_string().contains("2 channels"), "{err}");
}

#[test]
fn non_finite_input_is_rejected() {
    let mut x: Tensor4<f32> = Tensor4::zeros(1, 1, 2, 2);
    x.data_mut()[3] = f32::NAN;
    let p = ConvParams::new(tensor_from((1, 1, 1, 1), &[1.0]), vec![0.0]).unwrap();
    let err = conv2d_forward(&x, &p).unwrap_err();
    assert!(err.to_string().contains("non-finite"), "{err}");

    let x = tensor_from((1, 1, 1, 1), &[1.0]);
    let p = ConvParams::new(tensor_from((1, 1, 1, 1), &[f32::INFINITY]), vec![0.0]).unwrap();
    assert!(conv2d_forward(&x, &p).is_err());
}

#[test]
fn cotangent_shape_is_validated() {
    let x: Tensor4<f32> = Tensor4::zeros(1, 2, 4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = rand_params::<f32>(&mut rng, 3, 2, 3);
    let bad = Tensor4::zeros(1, 3, 4, 5);
    let err = conv2d_backward(&x, &p, &bad).unwrap_err();
    assert!(err.to_string().contains("expected shape (1, 3, 4, 4)"), "{err}");
}

#[test]
fn param_construction_is_validated() {
    assert!(ConvParams::new(Tensor4::<f32>::zeros(1, 1, 2, 2), vec![0.0]).is_err());
    assert!(ConvParams::new(Tensor4::<f32>::zeros(1, 1, 3, 1), vec![0.0]).is_err());
    assert!(ConvParams::new(Tensor4::<f32>::zeros(2, 1, 3, 3), vec![0.0]).is_err());
    assert!(ConvParams::new(Tensor4::<f32>::zeros(2, 1, 3, 3), vec![0.0; 2]).is_ok());
}

#[test]
fn forward_is_linear_in_input_with_zero_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let c = rng.random_range(1..=3);
        let h = rng.random_range(2..=6);
        let w = rng.random_range(2..=6);
        let a: Tensor4<f32> = rand_tensor(&mut rng, 1, c, h, w);
        let b: Tensor4<f32> = rand_tensor(&mut rng, 1, c, h, w);
        let wt = rand_tensor(&mut rng, 2, c, 3, 3);
        let p = ConvParams::new(wt, vec![0.0; 2]).unwrap();
        let alpha: f32 = rng.random_range(-2.0..2.0);
        let beta: f32 = rng.random_range(-2.0..2.0);

        let mixed_in = Tensor4::from_vec(
            a.shape(),
            a.data().iter().zip(b.data()).map(|(&p, &q)| alpha * p + beta * q).collect(),
        )
        .unwrap();
        let lhs = conv2d_forward(&mixed_in, &p).unwrap();
        let ya = conv2d_forward(&a, &p).unwrap();
        let yb = conv2d_forward(&b, &p).unwrap();
        for (idx, (&l, (&pa, &pb))) in lhs.data().iter().zip(ya.data().iter().zip(yb.data())).enumerate() {
            let r = alpha * pa + beta * pb;
            assert!(
                (l - r).abs() <= 1e-5 * (1.0 + l.abs().max(r.abs())),
                "idx {idx}: {l} vs {r}"
            );
        }
    }
}
