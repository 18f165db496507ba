use std::fmt;

use lesr_model::{Activation, ModelGraph, TraceLevel};
use lesr_tensor::{Scalar, Shape4, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{mse_loss, Result};

/// Entries subsampled per parameter tensor when checking large tensors.
const ENTRIES_PER_TENSOR: usize = 16;

#[derive(Clone, Debug)]
pub struct GradcheckRow {
    pub name: String,
    pub entries_checked: usize,
    pub max_rel: f64,
}

#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub rows: Vec<GradcheckRow>,
    pub tolerance: f64,
}

impl GradcheckReport {
    /// Largest relative error over all parameters.
    pub fn max_rel(&self) -> f64 {
        self.rows.iter().map(|r| r.max_rel).fold(0.0, f64::max)
    }

    pub fn entries_checked(&self) -> usize {
        self.rows.iter().map(|r| r.entries_checked).sum()
    }

    pub fn passed(&self) -> bool {
        self.max_rel() <= self.tolerance
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(0)
            .max("parameter".len());
        writeln!(f, "{:<width$}  entries  max_rel", "parameter")?;
        for r in &self.rows {
            writeln!(f, "{:<width$}  {:>7}  {:.3e}", r.name, r.entries_checked, r.max_rel)?;
        }
        write!(
            f,
            "max relative error {:.3e} ({} entries, tolerance {:.1e}): {}",
            self.max_rel(),
            self.entries_checked(),
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Moves every bias to a random value in ±[0.02, 0.2).
///
/// Freshly built models have all-zero biases, so some preactivations sit
/// exactly on the rectifier kink where central differences are not a valid
/// derivative oracle. Jittering probes a generic point of the same gradient
/// field.
pub fn jitter_biases<T: Scalar>(model: &mut ModelGraph<T>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.store_mut().visit_params_mut(|name, values| {
        if name.ends_with(".bias") {
            for v in values {
                let mag = rng.random_range(0.02..0.2);
                let sign = if rng.random_range(0..2) == 1 { 1.0 } else { -1.0 };
                *v = T::from_f64(sign * mag);
            }
        }
    });
}

fn loss_of(
    model: &ModelGraph<f64>,
    scale: u32,
    input: &Tensor4<f64>,
    target: &Tensor4<f64>,
    act: Activation,
) -> Result<f64> {
    let (pred, _) = model.forward_traced_with(input, scale, TraceLevel::Backward, act)?;
    Ok(mse_loss(&pred, target)?.0)
}

fn entry(model: &ModelGraph<f64>, tensor: usize, idx: usize) -> f64 {
    let mut i = 0;
    let mut out = 0.0;
    model.store().visit_params(|p| {
        if i == tensor {
            out = p.values[idx];
        }
        i += 1;
    });
    out
}

fn set_entry(model: &mut ModelGraph<f64>, tensor: usize, idx: usize, value: f64) {
    let mut i = 0;
    model.store_mut().visit_params_mut(|_, values| {
        if i == tensor {
            values[idx] = value;
        }
        i += 1;
    });
}

/// Runs forward, loss, and backward once and snapshots the analytic gradient
/// of the loss for every parameter tensor, in registration order.
pub fn collect_analytic_grads(
    model: &mut ModelGraph<f64>,
    scale: u32,
    input: &Tensor4<f64>,
    target: &Tensor4<f64>,
    act: Activation,
) -> Result<Vec<(String, Vec<f64>)>> {
    let (pred, trace) = model.forward_traced_with(input, scale, TraceLevel::Backward, act)?;
    let (_, grad) = mse_loss(&pred, target)?;
    model.backward(&trace, &grad)?;
    let mut out = Vec::new();
    for layer in model.store().layers() {
        out.push((
            format!("{}.weight", layer.name()),
            layer.grad_weight().data().to_vec(),
        ));
        out.push((format!("{}.bias", layer.name()), layer.grad_bias().to_vec()));
    }
    Ok(out)
}

/// Central-difference comparison against a previously collected analytic
/// gradient. Large tensors are subsampled deterministically. The relative
/// error uses a unit floor, so sub-unit gradients are compared absolutely.
pub fn compare_to_finite_differences(
    model: &mut ModelGraph<f64>,
    scale: u32,
    input: &Tensor4<f64>,
    target: &Tensor4<f64>,
    act: Activation,
    eps: f64,
    tolerance: f64,
    analytic: &[(String, Vec<f64>)],
) -> Result<GradcheckReport> {
    let mut rows = Vec::new();
    for (tensor, (name, grads)) in analytic.iter().enumerate() {
        let indices: Vec<usize> = if grads.len() <= ENTRIES_PER_TENSOR {
            (0..grads.len()).collect()
        } else {
            let stride = grads.len() / ENTRIES_PER_TENSOR;
            (0..ENTRIES_PER_TENSOR).map(|k| k * stride).collect()
        };
        let mut max_rel = 0.0f64;
        for &idx in &indices {
            let old = entry(model, tensor, idx);
            set_entry(model, tensor, idx, old + eps);
            let plus = loss_of(model, scale, input, target, act)?;
            set_entry(model, tensor, idx, old - eps);
            let minus = loss_of(model, scale, input, target, act)?;
            set_entry(model, tensor, idx, old);
            let fd = (plus - minus) / (2.0 * eps);
            let an = grads[idx];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1.0);
            max_rel = max_rel.max(rel);
        }
        rows.push(GradcheckRow {
            name: name.clone(),
            entries_checked: indices.len(),
            max_rel,
        });
    }
    Ok(GradcheckReport { rows, tolerance })
}

/// Deterministic uniform [0, 1) single-image input for a gradient check.
pub fn gradcheck_input(seed: u64, h: usize, w: usize) -> Tensor4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..3 * h * w).map(|_| rng.random_range(0.0..1.0)).collect();
    Tensor4::from_vec(Shape4::new(1, 3, h, w), data).expect("sized above")
}

/// Full-model gradient check at one scale: analytic backward versus central
/// differences of the loss, on a deterministic random target.
pub fn gradcheck(
    model: &mut ModelGraph<f64>,
    scale: u32,
    input: &Tensor4<f64>,
    tolerance: f64,
) -> Result<GradcheckReport> {
    gradcheck_with(model, scale, input, tolerance, 1e-6, Activation::Relu)
}

/// [`gradcheck`] with an explicit finite-difference step and activation
/// choice; `Activation::Identity` checks the purely linear data path.
pub fn gradcheck_with(
    model: &mut ModelGraph<f64>,
    scale: u32,
    input: &Tensor4<f64>,
    tolerance: f64,
    eps: f64,
    act: Activation,
) -> Result<GradcheckReport> {
    let s = input.shape();
    let (oh, ow) = (s.h * scale as usize, s.w * scale as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(0x54A6);
    let data = (0..s.n * 3 * oh * ow).map(|_| rng.random_range(0.0..1.0)).collect();
    let target = Tensor4::from_vec(Shape4::new(s.n, 3, oh, ow), data).expect("sized above");

    let analytic = collect_analytic_grads(model, scale, input, &target, act)?;
    compare_to_finite_differences(model, scale, input, &target, act, eps, tolerance, &analytic)
}
