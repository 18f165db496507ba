use std::path::{Path, PathBuf};

use lesr_model::{load_values, save_values, ParamStore, ValueRecord};
use lesr_tensor::Scalar;

use crate::{Result, TrainConfig, TrainError};

/// First and second moment estimates for every parameter tensor, in the
/// store's registration order (weight then bias per layer), plus the step
/// counter `t`. Moments start at zero; `t` starts at 0 and increments by
/// exactly 1 per optimizer step.
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        let mut m = Vec::new();
        store.visit_params(|p| m.push(vec![T::zero(); p.values.len()]));
        let v = m.clone();
        AdamState { m, v, t: 0 }
    }

    /// Number of optimizer steps taken so far.
    pub fn step(&self) -> u64 {
        self.t
    }

    fn check_matches(&self, store: &ParamStore<T>) -> Result<()> {
        let mut lens = Vec::new();
        store.visit_params(|p| lens.push((p.name, p.values.len())));
        if lens.len() != self.m.len() {
            return Err(TrainError::StateMismatch(format!(
                "state tracks {} tensors, model has {}",
                self.m.len(),
                lens.len()
            )));
        }
        for (i, (name, len)) in lens.iter().enumerate() {
            if self.m[i].len() != *len || self.v[i].len() != *len {
                return Err(TrainError::StateMismatch(format!(
                    "moment buffers for {name} hold {} values, parameter has {len}",
                    self.m[i].len()
                )));
            }
        }
        Ok(())
    }
}

/// Learning rate at a step: the initial rate halved once per completed
/// `halve_every` window, lr0 · 2^(−floor(step / halve_every)).
pub fn lr_at(step: u64, cfg: &TrainConfig) -> f64 {
    cfg.lr0 * 0.5f64.powi((step / cfg.halve_every) as i32)
}

/// One Adam update with bias correction:
/// m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², θ ← θ − lr·m̂/(√v̂ + ε).
///
/// Requires gradients populated by a backward pass since the last update;
/// consuming them marks the store stale again. Every per-coordinate update
/// magnitude is asserted to stay within the classical lr/(1−β₁) bound.
pub fn adam_step<T: Scalar>(
    store: &mut ParamStore<T>,
    state: &mut AdamState<T>,
    lr: f64,
    cfg: &TrainConfig,
) -> Result<()> {
    if !store.grads_ready() {
        return Err(TrainError::StaleGradients);
    }
    state.check_matches(store)?;
    state.t += 1;
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);
    let bc1 = 1.0 - b1.powi(state.t as i32);
    let bc2 = 1.0 - b2.powi(state.t as i32);
    let bound = lr / (1.0 - b1) * (1.0 + 1e-12);

    let mut idx = 0;
    for layer in store.layers_mut() {
        let (w, gw, b, gb) = layer.update_views();
        for (values, grads) in [(w, gw), (b, gb)] {
            let m = &mut state.m[idx];
            let v = &mut state.v[idx];
            idx += 1;
            for i in 0..values.len() {
                let g = grads[i].to_f64();
                let mi = b1 * m[i].to_f64() + (1.0 - b1) * g;
                let vi = b2 * v[i].to_f64() + (1.0 - b2) * g * g;
                m[i] = T::from_f64(mi);
                v[i] = T::from_f64(vi);
                let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + eps);
                assert!(
                    update.abs() <= bound,
                    "Adam update {update} exceeds the step-size bound {bound}"
                );
                values[i] -= T::from_f64(update);
            }
        }
    }
    store.set_grads_ready(false);
    Ok(())
}

/// Path of the optimizer-state file stored beside a checkpoint.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".adam");
    PathBuf::from(s)
}

/// Persists optimizer state beside a checkpoint: one `adam.step` scalar
/// followed by `adam.m.<param>` / `adam.v.<param>` pairs in registration
/// order.
pub fn save_adam_state<T: Scalar>(
    state: &AdamState<T>,
    store: &ParamStore<T>,
    path: &Path,
) -> Result<()> {
    state.check_matches(store)?;
    let mut records = vec![ValueRecord::scalar("adam.step", state.t as f32)];
    let mut idx = 0;
    store.visit_params(|p| {
        for (prefix, buf) in [("m", &state.m[idx]), ("v", &state.v[idx])] {
            records.push(ValueRecord {
                name: format!("adam.{prefix}.{}", p.name),
                dims: p.dims.clone(),
                values: buf.iter().map(|&x| Scalar::to_f64(x) as f32).collect(),
            });
        }
        idx += 1;
    });
    save_values(path, &records).map_err(TrainError::Model)
}

/// Loads optimizer state saved by [`save_adam_state`], validating every
/// record name and shape against the given model's parameters.
pub fn load_adam_state<T: Scalar>(store: &ParamStore<T>, path: &Path) -> Result<AdamState<T>> {
    let records = load_values(path).map_err(TrainError::Model)?;
    let mismatch = |msg: String| TrainError::StateMismatch(format!("{}: {msg}", path.display()));

    let mut expected = vec![("adam.step".to_string(), vec![])];
    store.visit_params(|p| {
        expected.push((format!("adam.m.{}", p.name), p.dims.clone()));
        expected.push((format!("adam.v.{}", p.name), p.dims.clone()));
    });
    if records.len() != expected.len() {
        return Err(mismatch(format!(
            "{} records, expected {}",
            records.len(),
            expected.len()
        )));
    }
    for (rec, (name, dims)) in records.iter().zip(&expected) {
        if rec.name != *name {
            return Err(mismatch(format!("record {}, expected {name}", rec.name)));
        }
        if rec.dims != *dims {
            return Err(mismatch(format!(
                "{} has dims {:?}, expected {dims:?}",
                rec.name, rec.dims
            )));
        }
    }

    let t = records[0].values[0];
    if t < 0.0 || t.fract() != 0.0 || t > (1u64 << 32) as f32 {
        return Err(mismatch(format!("step counter {t} is not a step count")));
    }
    let mut state = AdamState::new(store);
    state.t = t as u64;
    for (i, pair) in records[1..].chunks(2).enumerate() {
        state.m[i] = pair[0].values.iter().map(|&x| T::from_f64(x as f64)).collect();
        state.v[i] = pair[1].values.iter().map(|&x| T::from_f64(x as f64)).collect();
    }
    Ok(state)
}
