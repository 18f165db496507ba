use crate::{MetricsError, Result};
use lesr_imageio::{rgb_to_y, Plane, RgbImage};

/// Substitute for an infinite PSNR (identical images) when averaging.
///
/// `psnr` itself returns `f64::INFINITY` for a zero-error pair; reports cap
/// the value here so that means over a mixed set stay finite.
pub const PSNR_CAP: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Peak signal-to-noise ratio in decibels: `10 log10(peak^2 / mse)`.
///
/// Identical inputs have zero mean squared error and return
/// `f64::INFINITY`; see [`PSNR_CAP`] for how aggregates handle that.
pub fn psnr(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    check_pair(a, b)?;
    if !(peak.is_finite() && peak > 0.0) {
        return Err(MetricsError::Invalid(format!(
            "peak must be positive and finite, got {peak}"
        )));
    }
    let n = a.data().len() as f64;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    let mse = sse / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean structural similarity over an 11x11 Gaussian window (sigma 1.5),
/// evaluated only where the window fits entirely inside both images.
///
/// Stabilising constants are `(0.01 peak)^2` and `(0.03 peak)^2`. Identical
/// inputs score exactly 1.0. Errors if either dimension is below the window
/// size.
pub fn ssim(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    check_pair(a, b)?;
    if !(peak.is_finite() && peak > 0.0) {
        return Err(MetricsError::Invalid(format!(
            "peak must be positive and finite, got {peak}"
        )));
    }
    let (h, w) = (a.h(), a.w());
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(MetricsError::TooSmall {
            what: "image",
            h,
            w,
            min: SSIM_WINDOW,
            context: format!(": the similarity window is {SSIM_WINDOW}x{SSIM_WINDOW}"),
        });
    }

    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
    let kernel = gaussian_kernel();

    let mu_a = window_means(a, &kernel);
    let mu_b = window_means(b, &kernel);
    let e_aa = window_means(&product(a, a), &kernel);
    let e_bb = window_means(&product(b, b), &kernel);
    let e_ab = window_means(&product(a, b), &kernel);

    let mut sum = 0.0;
    for i in 0..mu_a.data().len() {
        let (ma, mb) = (mu_a.data()[i], mu_b.data()[i]);
        let var_a = e_aa.data()[i] - ma * ma;
        let var_b = e_bb.data()[i] - mb * mb;
        let cov = e_ab.data()[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
        sum += num / den;
    }
    Ok(sum / mu_a.data().len() as f64)
}

/// Round every sample to the nearest 8-bit level (halves round away from
/// zero) and clamp to [0, 255]. Values stay in floating point.
pub fn quantize_plane(p: &Plane) -> Plane {
    let data = p.data().iter().map(|v| v.round().clamp(0.0, 255.0)).collect();
    Plane::new(p.h(), p.w(), data)
}

/// Drop a `border`-pixel frame from every side.
pub fn shave(p: &Plane, border: usize) -> Result<Plane> {
    let (h, w) = (p.h(), p.w());
    if h <= 2 * border || w <= 2 * border {
        return Err(MetricsError::TooSmall {
            what: "image",
            h,
            w,
            min: 2 * border + 1,
            context: format!(" needed to shave a {border}-pixel border"),
        });
    }
    let (nh, nw) = (h - 2 * border, w - 2 * border);
    let mut data = Vec::with_capacity(nh * nw);
    for y in 0..nh {
        for x in 0..nw {
            data.push(p.at(y + border, x + border));
        }
    }
    Ok(Plane::new(nh, nw, data))
}

/// Standard super-resolution scoring protocol: convert both images to
/// limited-range luma, quantize to 8-bit levels, shave a `scale`-pixel
/// border, then compute PSNR and SSIM with peak 255.
pub fn eval_y_channel(sr: &RgbImage, hr: &RgbImage, scale: u32) -> Result<(f64, f64)> {
    eval_y(sr, hr, scale, true)
}

/// Same protocol as [`eval_y_channel`] but on unquantized luma, for callers
/// comparing against float-domain pipelines.
pub fn eval_y_channel_float(sr: &RgbImage, hr: &RgbImage, scale: u32) -> Result<(f64, f64)> {
    eval_y(sr, hr, scale, false)
}

fn eval_y(sr: &RgbImage, hr: &RgbImage, scale: u32, quantize: bool) -> Result<(f64, f64)> {
    if sr.h() != hr.h() || sr.w() != hr.w() {
        return Err(MetricsError::Shape(format!(
            "reconstruction is {}x{} but reference is {}x{}",
            sr.h(),
            sr.w(),
            hr.h(),
            hr.w()
        )));
    }
    let mut ys = rgb_to_y(sr);
    let mut yh = rgb_to_y(hr);
    if quantize {
        ys = quantize_plane(&ys);
        yh = quantize_plane(&yh);
    }
    let ys = shave(&ys, scale as usize)?;
    let yh = shave(&yh, scale as usize)?;
    Ok((psnr(&ys, &yh, 255.0)?, ssim(&ys, &yh, 255.0)?))
}

fn check_pair(a: &Plane, b: &Plane) -> Result<()> {
    if a.h() != b.h() || a.w() != b.w() {
        return Err(MetricsError::Shape(format!(
            "planes are {}x{} and {}x{}",
            a.h(),
            a.w(),
            b.h(),
            b.w()
        )));
    }
    if a.data().is_empty() {
        return Err(MetricsError::Invalid("empty plane".into()));
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

fn product(a: &Plane, b: &Plane) -> Plane {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x * y)
        .collect();
    Plane::new(a.h(), a.w(), data)
}

/// Separable weighted window sums over every fully interior window
/// position. Output is (h-10) x (w-10).
fn window_means(p: &Plane, kernel: &[f64; SSIM_WINDOW]) -> Plane {
    let (h, w) = (p.h(), p.w());
    let ow = w - (SSIM_WINDOW - 1);
    let oh = h - (SSIM_WINDOW - 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            let mut s = 0.0;
            for (i, &g) in kernel.iter().enumerate() {
                s += g * p.at(y, x + i);
            }
            tmp[y * ow + x] = s;
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (j, &g) in kernel.iter().enumerate() {
                s += g * tmp[(y + j) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    Plane::new(oh, ow, out)
}
