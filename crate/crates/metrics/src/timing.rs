use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use lesr_model::ModelGraph;
use lesr_tensor::{Scalar, Shape4, Tensor4};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::{MetricsError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub h: usize,
    pub w: usize,
    pub pixels: usize,
    pub median_ms: f64,
    pub repeats: usize,
}

/// Wall-clock forward-pass medians per input size, in the order measured.
#[derive(Clone, Debug)]
pub struct TimingTable {
    pub scale: u32,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    /// Whether the median never decreases as pixel count grows. Reported,
    /// not asserted: tiny inputs on a busy machine can reorder.
    pub fn is_monotone(&self) -> bool {
        let mut sorted: Vec<&TimingRow> = self.rows.iter().collect();
        sorted.sort_by_key(|r| r.pixels);
        sorted.windows(2).all(|p| p[0].median_ms <= p[1].median_ms)
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["h", "w", "pixels", "median_ms", "repeats"])?;
        for r in &self.rows {
            out.write_record([
                r.h.to_string(),
                r.w.to_string(),
                r.pixels.to_string(),
                format!("{:.3}", r.median_ms),
                r.repeats.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv(file)
    }
}

impl fmt::Display for TimingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>6} {:>9} {:>12}", "h", "w", "pixels", "median_ms")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>6} {:>9} {:>12.3}",
                r.h, r.w, r.pixels, r.median_ms
            )?;
        }
        writeln!(
            f,
            "scale x{}; {} repeats after 1 warmup; monotone in pixels: {}",
            self.scale,
            self.rows.first().map(|r| r.repeats).unwrap_or(0),
            self.is_monotone()
        )
    }
}

/// Median forward-pass time at each input size.
///
/// Each size gets one untimed warmup pass, then `repeats` timed passes;
/// with `repeats` of 1 the single timed pass is the median. Inputs are
/// seeded uniform noise, so repeated calls measure identical work.
pub fn time_inference<T: Scalar>(
    g: &ModelGraph<T>,
    scale: u32,
    sizes: &[(usize, usize)],
    repeats: usize,
) -> Result<TimingTable> {
    if repeats == 0 {
        return Err(MetricsError::Invalid("repeats must be at least 1".into()));
    }
    if sizes.is_empty() {
        return Err(MetricsError::Invalid("no input sizes given".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &(h, w) in sizes {
        if h == 0 || w == 0 {
            return Err(MetricsError::Invalid(format!(
                "input size must be nonzero, got {h}x{w}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(((h as u64) << 32) | w as u64);
        let data = (0..3 * h * w)
            .map(|_| T::from_f64(rng.random_range(0.0..1.0)))
            .collect();
        let input = Tensor4::from_vec(Shape4::new(1, 3, h, w), data).expect("sized above");

        g.forward(&input, scale)?;
        let mut times_ms = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t0 = Instant::now();
            let out = g.forward(&input, scale)?;
            times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(&out);
        }
        times_ms.sort_by(|a, b| a.total_cmp(b));
        let median_ms = if times_ms.len() % 2 == 1 {
            times_ms[times_ms.len() / 2]
        } else {
            let hi = times_ms.len() / 2;
            0.5 * (times_ms[hi - 1] + times_ms[hi])
        };
        rows.push(TimingRow {
            h,
            w,
            pixels: h * w,
            median_ms,
            repeats,
        });
    }
    Ok(TimingTable { scale, rows })
}
