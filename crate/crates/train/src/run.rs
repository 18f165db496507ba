use std::path::{Path, PathBuf};
use std::time::Instant;

use lesr_model::{save_checkpoint, ModelError, ModelGraph, TraceLevel};
use lesr_tensor::{Scalar, TensorError};

use crate::optim::{adam_step, lr_at, save_adam_state, sidecar_path, AdamState};
use crate::sample::{sample_batch, step_rng, TrainSet};
use crate::{mse_loss, Result, TrainConfig, TrainError};

/// One training step as logged: step index, learning rate, batch loss, and
/// wall-clock duration in milliseconds.
#[derive(Clone, Debug)]
pub struct LossRow {
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Where periodic and final checkpoints go; no checkpoints when absent.
    pub checkpoint_dir: Option<PathBuf>,
}

/// File name of the checkpoint written after `step` optimization steps.
pub fn checkpoint_name(step: u64) -> String {
    format!("step_{step:06}.ckpt")
}

fn write_checkpoint<T: Scalar>(
    model: &ModelGraph<T>,
    adam: &AdamState<T>,
    dir: &Path,
    name: &str,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| {
        TrainError::Config(format!("cannot create checkpoint dir {}: {e}", dir.display()))
    })?;
    let path = dir.join(name);
    save_checkpoint(model, &path)?;
    save_adam_state(adam, model.store(), &sidecar_path(&path))?;
    Ok(path)
}

/// Runs `sample → forward → loss → backward → Adam` from the optimizer's
/// current step up to `cfg.total_steps`, reporting each step through
/// `on_step` and returning all rows. Batches are keyed by (seed, step), so a
/// run resumed from a checkpoint (parameters plus optimizer sidecar) replays
/// the interrupted trajectory exactly.
///
/// Checkpoints land in `opts.checkpoint_dir` every `cfg.checkpoint_every`
/// steps and at the end. A non-finite loss aborts with the offending step
/// after writing a diagnostic checkpoint.
pub fn train<T: Scalar>(
    model: &mut ModelGraph<T>,
    adam: &mut AdamState<T>,
    set: &TrainSet,
    cfg: &TrainConfig,
    opts: &TrainOptions,
    mut on_step: impl FnMut(&LossRow),
) -> Result<Vec<LossRow>> {
    cfg.validate()?;
    for &scale in &cfg.scales {
        if !model.config().scales.contains(&scale) {
            return Err(TrainError::Config(format!(
                "training scale {scale} has no reconstruction head; model provides {:?}",
                model.config().scales
            )));
        }
    }

    let diverged = |model: &ModelGraph<T>, adam: &AdamState<T>, step: u64| {
        let checkpoint = match &opts.checkpoint_dir {
            Some(dir) => Some(write_checkpoint(
                model,
                adam,
                dir,
                &format!("diverged_{}", checkpoint_name(step)),
            )?),
            None => None,
        };
        Err(TrainError::NonFinite { step, checkpoint })
    };
    // Overflow inside the network surfaces as the next kernel rejecting a
    // non-finite operand; fold that into the divergence abort.
    let blown_up = |e: &ModelError| matches!(e, ModelError::Tensor(TensorError::NonFinite { .. }));

    let mut rows = Vec::new();
    for step in adam.step()..cfg.total_steps {
        let start = Instant::now();
        let mut rng = step_rng(cfg.seed, step);
        let batch = sample_batch::<T>(set, cfg, &mut rng)?;

        let (pred, trace) =
            match model.forward_traced(&batch.lr, batch.scale, TraceLevel::Backward) {
                Err(e) if blown_up(&e) => return diverged(model, adam, step),
                r => r?,
            };
        let (loss, grad) = mse_loss(&pred, &batch.hr)?;
        if !loss.is_finite() {
            return diverged(model, adam, step);
        }
        match model.backward(&trace, &grad) {
            Err(e) if blown_up(&e) => return diverged(model, adam, step),
            r => r?,
        }
        adam_step(model.store_mut(), adam, lr_at(step, cfg), cfg)?;

        let row = LossRow {
            step,
            lr: lr_at(step, cfg),
            loss,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        on_step(&row);
        rows.push(row);

        let done = adam.step();
        if let Some(dir) = &opts.checkpoint_dir {
            if done % cfg.checkpoint_every == 0 || done == cfg.total_steps {
                write_checkpoint(model, adam, dir, &checkpoint_name(done))?;
            }
        }
    }
    Ok(rows)
}
