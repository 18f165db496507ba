use std::path::Path;

use lesr_imageio::{bicubic_resize, load_png, DatasetManifest, RgbImage};
use lesr_tensor::{Scalar, Tensor4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convert::images_to_batch;
use crate::{Result, TrainConfig, TrainError};

/// One element of the dihedral augmentation group: an optional horizontal
/// flip applied first, then 0..=3 counterclockwise quarter turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transform {
    pub hflip: bool,
    pub quarter_turns: u8,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        hflip: false,
        quarter_turns: 0,
    };

    /// All eight group elements.
    pub fn all() -> [Transform; 8] {
        let mut out = [Transform::IDENTITY; 8];
        for (i, t) in out.iter_mut().enumerate() {
            t.hflip = i >= 4;
            t.quarter_turns = (i % 4) as u8;
        }
        out
    }

    /// Flip with probability 1/2, then a uniform quarter turn.
    pub fn sample(rng: &mut impl Rng) -> Transform {
        Transform {
            hflip: rng.random_range(0..2) == 1,
            quarter_turns: rng.random_range(0..4u8),
        }
    }

    /// The inverse element: with R a quarter turn and F the flip,
    /// (R^k F)^-1 = R^k F and (R^k)^-1 = R^(4-k).
    pub fn inverse(self) -> Transform {
        Transform {
            hflip: self.hflip,
            quarter_turns: if self.hflip {
                self.quarter_turns
            } else {
                (4 - self.quarter_turns) % 4
            },
        }
    }

    pub fn apply(&self, img: &RgbImage) -> RgbImage {
        let mut out = if self.hflip { hflip(img) } else { img.clone() };
        for _ in 0..self.quarter_turns {
            out = rot90(&out);
        }
        out
    }
}

fn hflip(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.h(), img.w());
    let mut out = RgbImage::filled(h, w, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            out.set_pixel(y, x, img.pixel(y, w - 1 - x));
        }
    }
    out
}

/// Counterclockwise quarter turn; (h, w) becomes (w, h).
fn rot90(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.h(), img.w());
    let mut out = RgbImage::filled(w, h, [0, 0, 0]);
    for y in 0..w {
        for x in 0..h {
            out.set_pixel(y, x, img.pixel(x, w - 1 - y));
        }
    }
    out
}

fn crop(img: &RgbImage, top: usize, left: usize, h: usize, w: usize) -> RgbImage {
    debug_assert!(top + h <= img.h() && left + w <= img.w());
    let mut data = Vec::with_capacity(3 * h * w);
    for y in top..top + h {
        let row = &img.data()[3 * (y * img.w() + left)..3 * (y * img.w() + left + w)];
        data.extend_from_slice(row);
    }
    RgbImage::new(h, w, data).expect("sized above")
}

/// High-resolution training images, sorted by name.
pub struct TrainSet {
    images: Vec<(String, RgbImage)>,
}

impl TrainSet {
    /// Loads a prepared dataset directory (via its manifest) or a plain
    /// directory of PNG files. Only the high-resolution images are read;
    /// low-resolution patches are synthesized per sample.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = dir.join("manifest.json");
        let mut images = Vec::new();
        if manifest.is_file() {
            let m = DatasetManifest::load(&manifest)?;
            for item in &m.items {
                let img = load_png(m.hr_path(dir, item))?;
                images.push((item.stem().to_string(), img));
            }
        } else {
            let mut paths = Vec::new();
            let entries = std::fs::read_dir(dir).map_err(|e| {
                TrainError::EmptyDataset(format!("cannot read {}: {e}", dir.display()))
            })?;
            for entry in entries {
                let path = entry
                    .map_err(|e| {
                        TrainError::EmptyDataset(format!("cannot read {}: {e}", dir.display()))
                    })?
                    .path();
                let is_png = path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"));
                if path.is_file() && is_png {
                    paths.push(path);
                }
            }
            paths.sort();
            for path in paths {
                let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                images.push((stem.into_owned(), load_png(&path)?));
            }
        }
        if images.is_empty() {
            return Err(TrainError::EmptyDataset(format!(
                "{} holds no training images",
                dir.display()
            )));
        }
        Ok(TrainSet { images })
    }

    /// Wraps in-memory images; names are their indices.
    pub fn from_images(images: Vec<RgbImage>) -> Result<Self> {
        if images.is_empty() {
            return Err(TrainError::EmptyDataset(
                "no training images supplied".into(),
            ));
        }
        Ok(TrainSet {
            images: images
                .into_iter()
                .enumerate()
                .map(|(i, img)| (i.to_string(), img))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Diagnostics for images too small to yield a patch of the given size.
    pub fn undersized(&self, patch: usize) -> Vec<String> {
        self.images
            .iter()
            .filter(|(_, img)| img.h() < patch || img.w() < patch)
            .map(|(name, img)| {
                format!(
                    "skipped {name}: {}x{} is smaller than the {patch}-pixel patch",
                    img.h(),
                    img.w()
                )
            })
            .collect()
    }

    fn eligible(&self, patch: usize) -> Vec<usize> {
        (0..self.images.len())
            .filter(|&i| self.images[i].1.h() >= patch && self.images[i].1.w() >= patch)
            .collect()
    }
}

/// Paired low/high-resolution patches in [0, 1]; hr is (b, 3, p, p) and lr is
/// (b, 3, p/scale, p/scale).
#[derive(Debug)]
pub struct PatchBatch<T> {
    pub lr: Tensor4<T>,
    pub hr: Tensor4<T>,
    pub scale: u32,
}

/// The per-step random stream: seeded by the run seed, stream keyed by step.
/// Stream 0 is left to model initialization, so sampling at a step depends
/// only on (seed, step) and resumed runs replay the same batches.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step + 1);
    rng
}

/// Draws one batch: uniform image choice, uniform patch origin, then (when
/// augmentation is on) an independent horizontal flip and uniform quarter
/// turn applied identically to both members of a pair. Multi-scale configs
/// draw the batch's scale first. Low-resolution patches are bicubic
/// downscales of the high-resolution crops. Undersized images are excluded
/// (see [`TrainSet::undersized`] for diagnostics).
pub fn sample_batch<T: Scalar>(
    set: &TrainSet,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<PatchBatch<T>> {
    cfg.validate()?;
    let eligible = set.eligible(cfg.patch);
    if eligible.is_empty() {
        return Err(TrainError::EmptyDataset(format!(
            "none of the {} images can yield a {}-pixel patch",
            set.len(),
            cfg.patch
        )));
    }
    let scale = if cfg.scales.len() > 1 {
        cfg.scales[rng.random_range(0..cfg.scales.len())]
    } else {
        cfg.scales[0]
    };
    let lr_size = cfg.patch / scale as usize;

    let mut hr_patches = Vec::with_capacity(cfg.batch_size);
    let mut lr_patches = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.batch_size {
        let (_, img) = &set.images[eligible[rng.random_range(0..eligible.len())]];
        let top = rng.random_range(0..=img.h() - cfg.patch);
        let left = rng.random_range(0..=img.w() - cfg.patch);
        let hr = crop(img, top, left, cfg.patch, cfg.patch);
        let lr = bicubic_resize(&hr, lr_size, lr_size);
        if cfg.augment {
            let t = Transform::sample(rng);
            hr_patches.push(t.apply(&hr));
            lr_patches.push(t.apply(&lr));
        } else {
            hr_patches.push(hr);
            lr_patches.push(lr);
        }
    }
    Ok(PatchBatch {
        lr: images_to_batch(&lr_patches)?,
        hr: images_to_batch(&hr_patches)?,
        scale,
    })
}
