use std::collections::BTreeSet;
use std::path::PathBuf;

use lesr_model::{ModelConfig, SUPPORTED_SCALES};
use lesr_train::TrainConfig;

use crate::args::{CommonArgs, ModelArgs, TrainArgs};
use crate::cfgfile::ConfigFile;
use crate::errors::{CliError, Result};

pub fn parse_scales(text: &str) -> Result<Vec<u32>> {
    let mut scales = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(CliError::Usage(format!(
                "invalid scales {text:?}: empty entry; expected values like \"2,3,4\""
            )));
        }
        let scale: u32 = part.parse().map_err(|_| {
            CliError::Usage(format!("invalid scales {text:?}: {part:?} is not an integer"))
        })?;
        if !SUPPORTED_SCALES.contains(&scale) {
            return Err(CliError::Usage(format!(
                "invalid scales {text:?}: scale {scale} is outside the supported set {SUPPORTED_SCALES:?}"
            )));
        }
        if scales.contains(&scale) {
            return Err(CliError::Usage(format!(
                "invalid scales {text:?}: scale {scale} is repeated"
            )));
        }
        scales.push(scale);
    }
    scales.sort_unstable();
    Ok(scales)
}

pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let err = || {
        CliError::Usage(format!(
            "invalid size {text:?}: expected HxW with positive integers, like 64x64"
        ))
    };
    let (h, w) = text.trim().split_once(['x', 'X']).ok_or_else(err)?;
    let h: usize = h.trim().parse().map_err(|_| err())?;
    let w: usize = w.trim().parse().map_err(|_| err())?;
    if h == 0 || w == 0 {
        return Err(err());
    }
    Ok((h, w))
}

pub fn parse_sizes(text: &str) -> Result<Vec<(usize, usize)>> {
    let sizes: Vec<(usize, usize)> = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_size)
        .collect::<Result<_>>()?;
    if sizes.is_empty() {
        return Err(CliError::Usage(format!(
            "invalid sizes {text:?}: expected a comma-separated list like 32x32,64x64"
        )));
    }
    Ok(sizes)
}

pub fn resolve_seed(common: &CommonArgs, file: &ConfigFile) -> Result<u64> {
    Ok(common.seed.or(file.get_u64("seed")?).unwrap_or(0))
}

/// The scale a subcommand should run at (head selection for eval, infer,
/// count, time, and gradcheck).
pub fn resolve_run_scale(model: &ModelArgs, file: &ConfigFile) -> Result<u32> {
    Ok(model.scale.or(file.get_u32("scale")?).unwrap_or(2))
}

pub fn resolve_model(model: &ModelArgs, file: &ConfigFile) -> Result<ModelConfig> {
    let variant_text = model
        .variant
        .clone()
        .or(file.get_string("variant")?)
        .unwrap_or_else(|| "lesrcnn".into());
    let variant = variant_text.parse().map_err(CliError::Usage)?;

    let convention_text = model
        .convention
        .clone()
        .or(file.get_string("convention")?)
        .unwrap_or_else(|| "standard".into());
    let convention = convention_text.parse().map_err(CliError::Usage)?;

    let scales: BTreeSet<u32> = if lesr_model::Variant::is_multi_scale(variant) {
        let text = model
            .scales
            .clone()
            .or(file.get_scales("scales")?)
            .unwrap_or_else(|| "2,3,4".into());
        parse_scales(&text)?.into_iter().collect()
    } else {
        BTreeSet::from([resolve_run_scale(model, file)?])
    };

    let mut cfg = ModelConfig::new(variant, scales);
    cfg.convention = convention;
    cfg.channels = model.channels.or(file.get_usize("channels")?).unwrap_or(64);
    cfg.ieeb_depth = model
        .ieeb_depth
        .or(file.get_usize("ieeb-depth")?)
        .unwrap_or(17);
    cfg.irb_depth = model
        .irb_depth
        .or(file.get_usize("irb-depth")?)
        .unwrap_or(5);
    cfg.validate()?;
    Ok(cfg)
}

/// Training hyperparameters merged from flags, config file, and defaults.
/// The training scales are the model's head scales, so a multi-scale model
/// trains on every head it has.
pub fn resolve_train_config(
    args: &TrainArgs,
    file: &ConfigFile,
    model_cfg: &ModelConfig,
    seed: u64,
) -> Result<TrainConfig> {
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        batch_size: args
            .batch_size
            .or(file.get_usize("batch-size")?)
            .unwrap_or(defaults.batch_size),
        lr0: args.lr0.or(file.get_f64("lr0")?).unwrap_or(defaults.lr0),
        beta1: args
            .beta1
            .or(file.get_f64("beta1")?)
            .unwrap_or(defaults.beta1),
        beta2: args
            .beta2
            .or(file.get_f64("beta2")?)
            .unwrap_or(defaults.beta2),
        epsilon: args
            .epsilon
            .or(file.get_f64("epsilon")?)
            .unwrap_or(defaults.epsilon),
        total_steps: args
            .total_steps
            .or(file.get_u64("total-steps")?)
            .unwrap_or(defaults.total_steps),
        halve_every: args
            .halve_every
            .or(file.get_u64("halve-every")?)
            .unwrap_or(defaults.halve_every),
        patch: args
            .patch
            .or(file.get_usize("patch")?)
            .unwrap_or(defaults.patch),
        scales: model_cfg.scales.iter().copied().collect(),
        seed,
        checkpoint_every: args
            .checkpoint_every
            .or(file.get_u64("checkpoint-every")?)
            .unwrap_or(defaults.checkpoint_every),
        augment: args
            .augment
            .or(file.get_bool("augment")?)
            .unwrap_or(defaults.augment),
    };
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

pub fn resolve_path(
    flag: &Option<PathBuf>,
    file: &ConfigFile,
    key: &str,
    default: &str,
) -> Result<PathBuf> {
    Ok(flag
        .clone()
        .or(file.get_path(key)?)
        .unwrap_or_else(|| PathBuf::from(default)))
}

pub fn resolve_opt_path(
    flag: &Option<PathBuf>,
    file: &ConfigFile,
    key: &str,
) -> Result<Option<PathBuf>> {
    Ok(flag.clone().or(file.get_path(key)?))
}
