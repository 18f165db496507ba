use crate::RgbImage;

/// Cubic-convolution kernel with a = -0.5. Support is (-2, 2); exact unit
/// partition: the four taps around any position sum to 1.
pub fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps for one resampled axis: for each output index, the clamped
/// source indices and their normalized weights. The sampling grid is
/// center-aligned: source position of output i is (i + 0.5)·in/out − 0.5.
/// When downscaling the kernel is stretched by the scale factor so it
/// averages rather than aliases. Edges replicate by index clamping; weights
/// are normalized to sum to 1.
pub fn resample_taps(in_len: usize, out_len: usize) -> Vec<(Vec<usize>, Vec<f64>)> {
    assert!(in_len > 0 && out_len > 0, "resample needs positive sizes");
    let scale = in_len as f64 / out_len as f64;
    let support = scale.max(1.0);
    let radius = 2.0 * support;

    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale - 0.5;
            let lo = (center - radius).ceil() as isize;
            let hi = (center + radius).floor() as isize;
            let mut indices = Vec::with_capacity((hi - lo + 1).max(0) as usize);
            let mut weights = Vec::with_capacity(indices.capacity());
            let mut sum = 0.0;
            for j in lo..=hi {
                let w = cubic_kernel((j as f64 - center) / support);
                if w == 0.0 {
                    continue;
                }
                indices.push(j.clamp(0, in_len as isize - 1) as usize);
                weights.push(w);
                sum += w;
            }
            for w in &mut weights {
                *w /= sum;
            }
            (indices, weights)
        })
        .collect()
}

/// Separable bicubic resample of an 8-bit image: horizontal pass then
/// vertical pass in f64, one final round (half away from zero) and clamp.
pub fn bicubic_resize(img: &RgbImage, out_h: usize, out_w: usize) -> RgbImage {
    assert!(out_h > 0 && out_w > 0, "resize needs a positive output size");
    let (in_h, in_w) = (img.h(), img.w());
    let src = img.data();

    let h_taps = resample_taps(in_w, out_w);
    let mut mid = vec![0.0f64; in_h * out_w * 3];
    for y in 0..in_h {
        let row = &src[3 * y * in_w..3 * (y + 1) * in_w];
        let out_row = &mut mid[3 * y * out_w..3 * (y + 1) * out_w];
        for (x, (indices, weights)) in h_taps.iter().enumerate() {
            let mut acc = [0.0f64; 3];
            for (&j, &w) in indices.iter().zip(weights) {
                let p = &row[3 * j..3 * j + 3];
                acc[0] += w * p[0] as f64;
                acc[1] += w * p[1] as f64;
                acc[2] += w * p[2] as f64;
            }
            out_row[3 * x..3 * x + 3].copy_from_slice(&acc);
        }
    }

    let v_taps = resample_taps(in_h, out_h);
    let mut out = vec![0u8; out_h * out_w * 3];
    for (y, (indices, weights)) in v_taps.iter().enumerate() {
        for x in 0..out_w {
            let mut acc = [0.0f64; 3];
            for (&j, &w) in indices.iter().zip(weights) {
                let p = &mid[3 * (j * out_w + x)..3 * (j * out_w + x) + 3];
                acc[0] += w * p[0];
                acc[1] += w * p[1];
                acc[2] += w * p[2];
            }
            for c in 0..3 {
                out[3 * (y * out_w + x) + c] = acc[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    RgbImage::new(out_h, out_w, out).expect("output dimensions are positive")
}
