use serde::{Deserialize, Serialize};

use crate::{Result, TrainError};

/// Hyperparameters for the optimization loop.
///
/// The defaults are a desk-scale schedule sized for CPU experiments. The
/// production-scale schedule (600k steps, halving every 400k, batch 64) is
/// available via [`TrainConfig::full_scale`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Initial learning rate; halved every `halve_every` steps.
    pub lr0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub total_steps: u64,
    pub halve_every: u64,
    /// High-resolution patch side length in pixels.
    pub patch: usize,
    /// Scales trained on. Single-scale models use a one-element list; the
    /// multi-scale variant draws one of these uniformly per batch.
    pub scales: Vec<u32>,
    pub seed: u64,
    pub checkpoint_every: u64,
    /// Random horizontal flip plus quarter-turn rotation of every patch pair.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            lr0: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            total_steps: 5_000,
            halve_every: 2_000,
            patch: 64,
            scales: vec![2],
            seed: 0,
            checkpoint_every: 1_000,
            augment: true,
        }
    }
}

impl TrainConfig {
    /// Production-scale schedule: batch 64, 600k steps, halving every 400k.
    pub fn full_scale() -> Self {
        TrainConfig {
            batch_size: 64,
            total_steps: 600_000,
            halve_every: 400_000,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(TrainError::Config(msg));
        if self.batch_size == 0 {
            return err("batch_size must be at least 1".into());
        }
        if !(self.lr0 > 0.0) {
            return err(format!("lr0 must be positive, got {}", self.lr0));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return err(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.halve_every == 0 {
            return err("halve_every must be at least 1".into());
        }
        if self.checkpoint_every == 0 {
            return err("checkpoint_every must be at least 1".into());
        }
        if self.patch == 0 {
            return err("patch must be at least 1".into());
        }
        if self.scales.is_empty() {
            return err("scales must not be empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for &s in &self.scales {
            if s == 0 {
                return err("scale 0 is not meaningful".into());
            }
            if !seen.insert(s) {
                return err(format!("duplicate scale {s}"));
            }
            if self.patch % s as usize != 0 {
                return err(format!(
                    "patch {} is not divisible by scale {s}, so low-resolution patches \
                     would not align",
                    self.patch
                ));
            }
        }
        Ok(())
    }
}
