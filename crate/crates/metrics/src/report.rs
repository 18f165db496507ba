use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::{MetricsError, Result, PSNR_CAP};

/// Scores for one evaluated image, optionally paired with the plain
/// bicubic-upscaling baseline on the same reference.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
    pub baseline_psnr: Option<f64>,
    pub baseline_ssim: Option<f64>,
}

impl EvalRow {
    pub fn new(name: impl Into<String>, psnr: f64, ssim: f64) -> Self {
        EvalRow {
            name: name.into(),
            psnr,
            ssim,
            baseline_psnr: None,
            baseline_ssim: None,
        }
    }

    pub fn with_baseline(mut self, psnr: f64, ssim: f64) -> Self {
        self.baseline_psnr = Some(psnr);
        self.baseline_ssim = Some(ssim);
        self
    }
}

/// Per-image quality scores plus aggregate means for one scale factor.
///
/// `push` enforces the score invariants: SSIM lies in [-1, 1] and PSNR is
/// positive (infinite for an exact match). Means substitute [`PSNR_CAP`]
/// for infinite entries so they stay finite.
#[derive(Clone, Debug)]
pub struct EvalReport {
    scale: u32,
    protocol: String,
    rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn new(scale: u32) -> Self {
        EvalReport {
            scale,
            protocol: format!(
                "limited-range BT.601 luma, 8-bit quantized, {scale}-pixel border shaved, \
                 peak 255; infinite psnr counted as {PSNR_CAP} dB in means"
            ),
            rows: Vec::new(),
        }
    }

    /// Same report shape with a caller-supplied protocol description, for
    /// float-domain or otherwise nonstandard scoring runs.
    pub fn with_protocol(scale: u32, protocol: impl Into<String>) -> Self {
        EvalReport {
            scale,
            protocol: protocol.into(),
            rows: Vec::new(),
        }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn protocol(&self) -> &str {
        &self.protocol
    }

    pub fn rows(&self) -> &[EvalRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: EvalRow) -> Result<()> {
        check_scores(&row.name, row.psnr, row.ssim)?;
        if let (Some(p), Some(s)) = (row.baseline_psnr, row.baseline_ssim) {
            check_scores(&row.name, p, s)?;
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn mean_psnr(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.psnr))
    }

    pub fn mean_ssim(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.ssim))
    }

    /// Baseline means, present only when every row carries a baseline.
    pub fn mean_baseline(&self) -> Option<(f64, f64)> {
        if self.rows.is_empty()
            || self
                .rows
                .iter()
                .any(|r| r.baseline_psnr.is_none() || r.baseline_ssim.is_none())
        {
            return None;
        }
        Some((
            mean(self.rows.iter().map(|r| r.baseline_psnr.unwrap())),
            mean(self.rows.iter().map(|r| r.baseline_ssim.unwrap())),
        ))
    }

    /// One row per image plus one `mean` aggregate row.
    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["image", "psnr", "ssim", "bicubic_psnr", "bicubic_ssim"])?;
        for r in &self.rows {
            out.write_record([
                r.name.clone(),
                fmt_psnr(r.psnr),
                fmt_ssim(r.ssim),
                r.baseline_psnr.map(fmt_psnr).unwrap_or_default(),
                r.baseline_ssim.map(fmt_ssim).unwrap_or_default(),
            ])?;
        }
        let base = self.mean_baseline();
        out.write_record([
            "mean".to_string(),
            fmt_psnr(self.mean_psnr()),
            fmt_ssim(self.mean_ssim()),
            base.map(|(p, _)| fmt_psnr(p)).unwrap_or_default(),
            base.map(|(_, s)| fmt_ssim(s)).unwrap_or_default(),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv(file)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(["mean".len()])
            .max()
            .unwrap_or(4)
            .max(5);
        writeln!(
            f,
            "{:<name_w$}  {:>9}  {:>7}  {:>13}  {:>13}",
            "image", "psnr", "ssim", "bicubic_psnr", "bicubic_ssim"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<name_w$}  {:>9}  {:>7}  {:>13}  {:>13}",
                r.name,
                fmt_psnr(r.psnr),
                fmt_ssim(r.ssim),
                r.baseline_psnr.map(fmt_psnr).unwrap_or_default(),
                r.baseline_ssim.map(fmt_ssim).unwrap_or_default(),
            )?;
        }
        let base = self.mean_baseline();
        writeln!(
            f,
            "{:<name_w$}  {:>9}  {:>7}  {:>13}  {:>13}",
            "mean",
            fmt_psnr(self.mean_psnr()),
            fmt_ssim(self.mean_ssim()),
            base.map(|(p, _)| fmt_psnr(p)).unwrap_or_default(),
            base.map(|(_, s)| fmt_ssim(s)).unwrap_or_default(),
        )?;
        writeln!(f, "scale x{}; {}", self.scale, self.protocol)
    }
}

fn check_scores(name: &str, psnr: f64, ssim: f64) -> Result<()> {
    if psnr.is_nan() || psnr <= 0.0 {
        return Err(MetricsError::Invalid(format!(
            "psnr for {name} must be positive, got {psnr}"
        )));
    }
    if !(-1.0..=1.0).contains(&ssim) {
        return Err(MetricsError::Invalid(format!(
            "ssim for {name} must lie in [-1, 1], got {ssim}"
        )));
    }
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v.min(PSNR_CAP);
        n += 1;
    }
    sum / n as f64
}

fn fmt_psnr(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_ssim(v: f64) -> String {
    format!("{v:.6}")
}
