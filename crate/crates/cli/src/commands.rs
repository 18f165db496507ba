use std::io::Write;
use std::path::Path;

use lesr_imageio::{
    bicubic_resize, load_png, prepare_dataset, save_png, DatasetManifest, RgbImage,
};
use lesr_metrics::{
    count_flops, count_params, eval_y_channel, eval_y_channel_float, time_inference, EvalReport,
    EvalRow,
};
use lesr_model::{build_model, load_checkpoint, ModelGraph};
use lesr_train::{
    checkpoint_name, gradcheck, gradcheck_input, image_to_tensor, jitter_biases, load_adam_state,
    sidecar_path, tensor_to_images, train, AdamState, LossRow, TrainOptions, TrainSet,
};

use crate::args::*;
use crate::cfgfile::ConfigFile;
use crate::errors::{CliError, Result};
use crate::resolve::*;

pub fn cmd_prepare(args: &PrepareArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let hr_dir = resolve_path(&args.hr_dir, &file, "hr-dir", ".")?;
    let out = resolve_path(&args.out, &file, "out", "dataset")?;
    let scales_text = args
        .scales
        .clone()
        .or(file.get_scales("scales")?)
        .unwrap_or_else(|| "2,3,4".into());
    let scales = parse_scales(&scales_text)?;

    let outcome = prepare_dataset(&hr_dir, &scales, &out)?;
    for line in &outcome.skipped {
        eprintln!("{line}");
    }
    println!(
        "prepared {} images at scales {:?} into {}",
        outcome.manifest.items.len(),
        outcome.manifest.scales,
        out.display()
    );
    println!("manifest: {}", out.join("manifest.json").display());
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &file)?;
    let model_cfg = resolve_model(&args.model, &file)?;
    let train_cfg = resolve_train_config(args, &file, &model_cfg, seed)?;
    let data = resolve_path(&args.data, &file, "data", "dataset")?;
    let out = resolve_path(&args.out, &file, "out", "runs")?;
    let resume = resolve_opt_path(&args.resume, &file, "resume")?;
    let print_every = args
        .print_every
        .or(file.get_u64("print-every")?)
        .unwrap_or(100)
        .max(1);

    let mut model: ModelGraph<f32> = match &resume {
        Some(path) => load_model(path, &model_cfg)?,
        None => build_model(&model_cfg, seed)?,
    };
    let mut adam = match &resume {
        Some(path) => load_adam_state(model.store(), &sidecar_path(path))?,
        None => AdamState::new(model.store()),
    };
    let set = TrainSet::load(&data)?;
    for line in set.undersized(train_cfg.patch) {
        eprintln!("{line}");
    }

    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    let opts = TrainOptions {
        checkpoint_dir: Some(out.clone()),
    };

    let total = train_cfg.total_steps;
    let mut rows: Vec<LossRow> = Vec::new();
    let outcome = train(&mut model, &mut adam, &set, &train_cfg, &opts, |row| {
        let done = row.step + 1;
        if done % print_every == 0 || done == total {
            println!(
                "step {done}/{total}  lr {:.3e}  loss {:.6e}",
                row.lr, row.loss
            );
        }
        rows.push(row.clone());
    });

    let log_path = out.join("loss.csv");
    write_loss_log(&log_path, &rows)?;

    outcome?;
    println!("loss log: {}", log_path.display());
    println!("final checkpoint: {}", out.join(checkpoint_name(total)).display());
    Ok(())
}

fn write_loss_log(path: &Path, rows: &[LossRow]) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["step", "lr", "loss", "wall_ms"])
        .map_err(|e| CliError::Data(e.to_string()))?;
    for row in rows {
        w.write_record([
            row.step.to_string(),
            format!("{:.8e}", row.lr),
            format!("{:.8e}", row.loss),
            format!("{:.3}", row.wall_ms),
        ])
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let scale = resolve_run_scale(&args.model, &file)?;
    let data = resolve_path(&args.data, &file, "data", "dataset")?;
    let out = resolve_path(&args.out, &file, "out", "eval.csv")?;
    let ckpt = resolve_opt_path(&args.ckpt, &file, "ckpt")?;
    let float_y = args
        .float_y
        .or(file.get_bool("float-y")?)
        .unwrap_or(false);

    let model: Option<ModelGraph<f32>> = match &ckpt {
        Some(path) => {
            let model_cfg = resolve_model(&args.model, &file)?;
            Some(load_model(path, &model_cfg)?)
        }
        None => None,
    };

    let manifest = DatasetManifest::load(data.join("manifest.json"))?;
    manifest.validate(&data)?;
    let score = |sr: &RgbImage, hr: &RgbImage| -> Result<(f64, f64)> {
        if float_y {
            Ok(eval_y_channel_float(sr, hr, scale)?)
        } else {
            Ok(eval_y_channel(sr, hr, scale)?)
        }
    };

    let mut report = if float_y {
        EvalReport::with_protocol(
            scale,
            format!(
                "limited-range BT.601 luma in float, {scale}-pixel border shaved, peak 255; \
                 infinite psnr counted as 100 dB in means"
            ),
        )
    } else {
        EvalReport::new(scale)
    };

    for item in &manifest.items {
        let hr = load_png(manifest.hr_path(&data, item))?;
        let lr_path = manifest.lr_path(&data, item, scale).ok_or_else(|| {
            CliError::Data(format!(
                "dataset {} has no x{scale} images for {}",
                data.display(),
                item.stem()
            ))
        })?;
        let lr = load_png(lr_path)?;
        let bicubic = bicubic_resize(&lr, hr.h(), hr.w());
        let (base_psnr, base_ssim) = score(&bicubic, &hr)?;
        let (psnr, ssim) = match &model {
            Some(g) => {
                let sr = upscale(g, &lr, scale)?;
                score(&sr, &hr)?
            }
            None => (base_psnr, base_ssim),
        };
        report.push(EvalRow::new(item.stem(), psnr, ssim).with_baseline(base_psnr, base_ssim))?;
    }

    print!("{report}");
    report.write_csv(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn load_model(path: &Path, cfg: &lesr_model::ModelConfig) -> Result<ModelGraph<f32>> {
    load_checkpoint(path, cfg).map_err(|e| match e {
        lesr_model::ModelError::Io(io) => {
            CliError::Data(format!("checkpoint {}: {io}", path.display()))
        }
        other => other.into(),
    })
}

fn upscale(g: &ModelGraph<f32>, lr: &RgbImage, scale: u32) -> Result<RgbImage> {
    let input = image_to_tensor::<f32>(lr);
    let output = g.forward(&input, scale)?;
    let mut images = tensor_to_images(&output)?;
    Ok(images.swap_remove(0))
}

pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let scale = resolve_run_scale(&args.model, &file)?;
    let model_cfg = resolve_model(&args.model, &file)?;
    let ckpt = resolve_path(&args.ckpt, &file, "ckpt", "model.ckpt")?;
    let input = resolve_path(&args.input, &file, "input", "input.png")?;
    let out = resolve_path(&args.out, &file, "out", "sr.png")?;

    let model = load_model(&ckpt, &model_cfg)?;
    let lr = load_png(&input)?;
    let sr = upscale(&model, &lr, scale)?;
    save_png(&sr, &out)?;
    println!(
        "wrote {} ({}x{} -> {}x{})",
        out.display(),
        lr.h(),
        lr.w(),
        sr.h(),
        sr.w()
    );
    Ok(())
}

pub fn cmd_count(args: &CountArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &file)?;
    let scale = resolve_run_scale(&args.model, &file)?;
    let model_cfg = resolve_model(&args.model, &file)?;
    let size_text = args
        .size
        .clone()
        .or(file.get_string("size")?)
        .unwrap_or_else(|| "64x64".into());
    let (h, w) = parse_size(&size_text)?;
    let out = resolve_opt_path(&args.out, &file, "out")?;

    let model: ModelGraph<f32> = build_model(&model_cfg, seed)?;
    let params = count_params(&model);
    let flops = count_flops(&model, scale, h, w)?;

    println!("parameters ({} {}):", model_cfg.variant, model_cfg.convention);
    print!("{params}");
    println!();
    println!("operations:");
    print!("{flops}");

    if let Some(path) = out {
        flops.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_time(args: &TimeArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &file)?;
    let scale = resolve_run_scale(&args.model, &file)?;
    let model_cfg = resolve_model(&args.model, &file)?;
    let sizes_text = args
        .sizes
        .clone()
        .or(file.get_string("sizes")?)
        .unwrap_or_else(|| "32x32,64x64,96x96".into());
    let sizes = parse_sizes(&sizes_text)?;
    let repeats = args.repeats.or(file.get_usize("repeats")?).unwrap_or(5);
    let out = resolve_opt_path(&args.out, &file, "out")?;

    let model: ModelGraph<f32> = build_model(&model_cfg, seed)?;
    let table = time_inference(&model, scale, &sizes, repeats)?;
    print!("{table}");
    if let Some(path) = out {
        table.write_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let file = ConfigFile::load(args.common.config.as_deref())?;
    let seed = resolve_seed(&args.common, &file)?;
    let scale = resolve_run_scale(&args.model, &file)?;
    let model_cfg = resolve_model(&args.model, &file)?;
    let size_text = args
        .size
        .clone()
        .or(file.get_string("size")?)
        .unwrap_or_else(|| "8x8".into());
    let (h, w) = parse_size(&size_text)?;
    let tolerance = args
        .tolerance
        .or(file.get_f64("tolerance")?)
        .unwrap_or(1e-4);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(CliError::Usage(format!(
            "tolerance must be positive and finite, got {tolerance}"
        )));
    }

    let mut model: ModelGraph<f64> = build_model(&model_cfg, seed)?;
    jitter_biases(&mut model, seed);
    let input = gradcheck_input(seed, h, w);

    let report = gradcheck(&mut model, scale, &input, tolerance)?;
    println!("{report}");
    std::io::stdout().flush().ok();
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "gradient check failed: max relative error {:.3e} exceeds {tolerance:.1e}",
            report.max_rel()
        )))
    }
}
