use std::fmt;
use std::io::Write;
use std::path::Path;

use lesr_model::{Convention, ModelGraph};
use lesr_tensor::Scalar;

use crate::{MetricsError, Result};

/// Cost of one convolution layer. Multiply-accumulate and FLOP figures
/// cover every application of the layer in one forward pass; shared layers
/// applied twice are counted twice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCost {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub weights: u64,
    pub biases: u64,
    pub applications: u32,
    /// Spatial size the layer executes at; zero in parameter-only reports.
    pub out_h: usize,
    pub out_w: usize,
    pub macs: u64,
    pub flops: u64,
}

impl LayerCost {
    pub fn params(&self) -> u64 {
        self.weights + self.biases
    }
}

/// Per-layer cost table with totals that are exact sums of the rows.
///
/// One FLOP here is one scalar operation: a multiply-accumulate counts as
/// two, and adding the bias counts one per output element.
#[derive(Clone, Debug)]
pub struct ComplexityReport {
    pub rows: Vec<LayerCost>,
    pub convention: Convention,
    /// Scale factor the operation counts were taken at, if any.
    pub scale: Option<u32>,
    /// Low-resolution input size the operation counts were taken at, if any.
    pub input: Option<(usize, usize)>,
    pub note: String,
}

impl ComplexityReport {
    pub fn total_weights(&self) -> u64 {
        self.rows.iter().map(|r| r.weights).sum()
    }

    pub fn total_biases(&self) -> u64 {
        self.rows.iter().map(|r| r.biases).sum()
    }

    pub fn total_params(&self) -> u64 {
        self.rows.iter().map(|r| r.params()).sum()
    }

    pub fn total_macs(&self) -> u64 {
        self.rows.iter().map(|r| r.macs).sum()
    }

    pub fn total_flops(&self) -> u64 {
        self.rows.iter().map(|r| r.flops).sum()
    }

    pub fn row(&self, name: &str) -> Option<&LayerCost> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// One row per layer plus one `total` row.
    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "layer", "c_in", "c_out", "k", "weights", "biases", "params", "applications",
            "out_h", "out_w", "macs", "flops",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.name.clone(),
                r.c_in.to_string(),
                r.c_out.to_string(),
                r.k.to_string(),
                r.weights.to_string(),
                r.biases.to_string(),
                r.params().to_string(),
                r.applications.to_string(),
                r.out_h.to_string(),
                r.out_w.to_string(),
                r.macs.to_string(),
                r.flops.to_string(),
            ])?;
        }
        out.write_record([
            "total".to_string(),
            String::new(),
            String::new(),
            String::new(),
            self.total_weights().to_string(),
            self.total_biases().to_string(),
            self.total_params().to_string(),
            String::new(),
            String::new(),
            String::new(),
            self.total_macs().to_string(),
            self.total_flops().to_string(),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv(file)
    }
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(["total".len()])
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(
            f,
            "{:<name_w$}  {:>5} {:>5} {:>2} {:>10} {:>4} {:>14} {:>14}",
            "layer", "c_in", "c_out", "k", "params", "apps", "macs", "flops"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<name_w$}  {:>5} {:>5} {:>2} {:>10} {:>4} {:>14} {:>14}",
                r.name,
                r.c_in,
                r.c_out,
                r.k,
                r.params(),
                r.applications,
                r.macs,
                r.flops
            )?;
        }
        writeln!(
            f,
            "{:<name_w$}  {:>5} {:>5} {:>2} {:>10} {:>4} {:>14} {:>14}",
            "total",
            "",
            "",
            "",
            self.total_params(),
            "",
            self.total_macs(),
            self.total_flops()
        )?;
        writeln!(f, "{}", self.note)
    }
}

/// Exact learnable-parameter counts per layer, matching the parameter store
/// element for element.
pub fn count_params<T: Scalar>(g: &ModelGraph<T>) -> ComplexityReport {
    let cfg = g.config();
    let rows = g
        .store()
        .layers()
        .map(|layer| {
            let p = layer.params();
            LayerCost {
                name: layer.name().to_string(),
                c_in: p.c_in(),
                c_out: p.c_out(),
                k: p.kernel(),
                weights: (p.c_out() * p.c_in() * p.kernel() * p.kernel()) as u64,
                biases: p.c_out() as u64,
                applications: 1,
                out_h: 0,
                out_w: 0,
                macs: 0,
                flops: 0,
            }
        })
        .collect();
    ComplexityReport {
        rows,
        convention: cfg.convention,
        scale: None,
        input: None,
        note: format!(
            "learnable parameters only; head convention: {:?}",
            cfg.convention
        ),
    }
}

/// Operation counts for one forward pass at `scale` on an `lr_h` x `lr_w`
/// low-resolution input, at the resolution each layer actually executes at.
pub fn count_flops<T: Scalar>(
    g: &ModelGraph<T>,
    scale: u32,
    lr_h: usize,
    lr_w: usize,
) -> Result<ComplexityReport> {
    if lr_h == 0 || lr_w == 0 {
        return Err(MetricsError::Invalid(format!(
            "input size must be nonzero, got {lr_h}x{lr_w}"
        )));
    }
    let cfg = g.config();
    let rows = g
        .execution_plan(scale)?
        .into_iter()
        .map(|e| {
            let mul = e.spatial_mul as u64;
            let out_elems = e.c_out as u64 * (lr_h as u64 * mul) * (lr_w as u64 * mul);
            let macs = e.applications as u64 * out_elems * (e.c_in * e.k * e.k) as u64;
            let bias_adds = e.applications as u64 * out_elems;
            LayerCost {
                name: e.name,
                c_in: e.c_in,
                c_out: e.c_out,
                k: e.k,
                weights: (e.c_out * e.c_in * e.k * e.k) as u64,
                biases: e.c_out as u64,
                applications: e.applications,
                out_h: lr_h * mul as usize,
                out_w: lr_w * mul as usize,
                macs,
                flops: 2 * macs + bias_adds,
            }
        })
        .collect();
    Ok(ComplexityReport {
        rows,
        convention: cfg.convention,
        scale: Some(scale),
        input: Some((lr_h, lr_w)),
        note: format!(
            "one forward pass at x{scale} on a {lr_h}x{lr_w} input; head convention: {:?}; \
             1 multiply-accumulate = 2 flops, bias adds counted once per output element",
            cfg.convention
        ),
    })
}
