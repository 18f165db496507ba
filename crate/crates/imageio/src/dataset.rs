use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{bicubic_resize, load_png, save_png, ImageError, Result, RgbImage};

pub const SUPPORTED_DATASET_SCALES: [u32; 3] = [2, 3, 4];

/// One dataset entry: a high-resolution image and its synthesized
/// low-resolution counterparts, paths relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub hr: String,
    pub lr: BTreeMap<u32, String>,
}

impl ManifestItem {
    /// File stem of the high-resolution image.
    pub fn stem(&self) -> &str {
        Path::new(&self.hr)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(&self.hr)
    }
}

/// Index of a prepared dataset, stored as JSON next to the image folders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub scales: Vec<u32>,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| ImageError::Manifest {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| ImageError::io(path, e))
    }

    /// Loads and validates a manifest: every referenced file must exist
    /// relative to the manifest's directory, stems must be unique, and every
    /// item must carry exactly the manifest's scales.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ImageError::io(path, e))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| ImageError::Manifest {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.validate(base)?;
        Ok(manifest)
    }

    pub fn validate(&self, base: &Path) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for item in &self.items {
            if !seen.insert(item.stem().to_string()) {
                return Err(ImageError::DuplicateStem {
                    stem: item.stem().to_string(),
                });
            }
            let keys: Vec<u32> = item.lr.keys().copied().collect();
            if keys != self.scales {
                return Err(ImageError::Manifest {
                    path: base.display().to_string(),
                    detail: format!(
                        "{} lists low-resolution scales {keys:?}, manifest declares {:?}",
                        item.hr, self.scales
                    ),
                });
            }
            for rel in std::iter::once(&item.hr).chain(item.lr.values()) {
                let p = base.join(rel);
                if !p.is_file() {
                    return Err(ImageError::MissingFile {
                        path: p.display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Absolute (base-joined) path of an item's HR image.
    pub fn hr_path(&self, base: &Path, item: &ManifestItem) -> PathBuf {
        base.join(&item.hr)
    }

    pub fn lr_path(&self, base: &Path, item: &ManifestItem, scale: u32) -> Option<PathBuf> {
        item.lr.get(&scale).map(|rel| base.join(rel))
    }
}

/// Result of dataset preparation: the manifest plus one diagnostic line per
/// skipped input.
#[derive(Debug)]
pub struct PrepareOutcome {
    pub manifest: DatasetManifest,
    pub skipped: Vec<String>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn validate_scales(scales: &[u32]) -> Result<Vec<u32>> {
    if scales.is_empty() {
        return Err(ImageError::InvalidScales("no scales given".into()));
    }
    let mut sorted: Vec<u32> = scales.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &s in &sorted {
        if !SUPPORTED_DATASET_SCALES.contains(&s) {
            return Err(ImageError::InvalidScales(format!(
                "scale {s} is outside the supported set {SUPPORTED_DATASET_SCALES:?}"
            )));
        }
    }
    Ok(sorted)
}

/// Crops every readable PNG under `hr_dir` so its sides divide by all
/// requested scales, synthesizes bicubic LR images per scale, writes
/// out_dir/HR and out_dir/LR_x{scale} plus out_dir/manifest.json, and
/// returns the manifest. Unreadable or too-small inputs are skipped with a
/// diagnostic. Re-running over the same inputs rewrites identical bytes.
pub fn prepare_dataset(
    hr_dir: impl AsRef<Path>,
    scales: &[u32],
    out_dir: impl AsRef<Path>,
) -> Result<PrepareOutcome> {
    let hr_dir = hr_dir.as_ref();
    let out_dir = out_dir.as_ref();
    let scales = validate_scales(scales)?;
    let align = scales.iter().fold(1usize, |acc, &s| lcm(acc, s as usize));

    let mut sources: Vec<(String, PathBuf)> = Vec::new();
    let entries = fs::read_dir(hr_dir).map_err(|e| ImageError::io(hr_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| ImageError::io(hr_dir, e))?;
        let path = entry.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !path.is_file() || !is_png {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => continue,
        };
        sources.push((stem, path));
    }
    sources.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in sources.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(ImageError::DuplicateStem {
                stem: pair[0].0.clone(),
            });
        }
    }
    if sources.is_empty() {
        return Err(ImageError::EmptyDataset {
            dir: hr_dir.display().to_string(),
        });
    }

    fs::create_dir_all(out_dir.join("HR")).map_err(|e| ImageError::io(out_dir, e))?;
    for &s in &scales {
        fs::create_dir_all(out_dir.join(format!("LR_x{s}"))).map_err(|e| ImageError::io(out_dir, e))?;
    }

    let results = convert_all(&sources, &scales, align, out_dir);

    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for (stem, outcome) in sources.iter().map(|(s, _)| s).zip(results) {
        match outcome {
            Ok(item) => items.push(item),
            Err(reason) => skipped.push(format!("skipped {stem}: {reason}")),
        }
    }
    if items.is_empty() {
        return Err(ImageError::EmptyDataset {
            dir: hr_dir.display().to_string(),
        });
    }

    let name = hr_dir
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    let manifest = DatasetManifest {
        name,
        scales,
        items,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(PrepareOutcome { manifest, skipped })
}

fn convert_all(
    sources: &[(String, PathBuf)],
    scales: &[u32],
    align: usize,
    out_dir: &Path,
) -> Vec<std::result::Result<ManifestItem, String>> {
    let convert = |(stem, path): &(String, PathBuf)| convert_one(stem, path, scales, align, out_dir);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sources.par_iter().map(convert).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sources.iter().map(convert).collect()
    }
}

fn convert_one(
    stem: &str,
    path: &Path,
    scales: &[u32],
    align: usize,
    out_dir: &Path,
) -> std::result::Result<ManifestItem, String> {
    let img = load_png(path).map_err(|e| e.to_string())?;
    let (h, w) = (img.h() - img.h() % align, img.w() - img.w() % align);
    if h == 0 || w == 0 {
        return Err(format!(
            "{}x{} is smaller than the {align}-pixel alignment",
            img.h(),
            img.w()
        ));
    }
    let hr = img.crop_top_left(h, w).map_err(|e| e.to_string())?;
    let hr_rel = format!("HR/{stem}.png");
    save_png(&hr, out_dir.join(&hr_rel)).map_err(|e| e.to_string())?;

    let mut lr = BTreeMap::new();
    for &s in scales {
        let scaled = bicubic_resize(&hr, h / s as usize, w / s as usize);
        let rel = format!("LR_x{s}/{stem}.png");
        save_png(&scaled, out_dir.join(&rel)).map_err(|e| e.to_string())?;
        lr.insert(s, rel);
    }
    Ok(ManifestItem { hr: hr_rel, lr })
}

/// Convenience wrapper: `hr = scale · lr` must hold exactly for prepared
/// pairs; callers use this to assert the invariant.
pub fn sizes_align(hr: &RgbImage, lr: &RgbImage, scale: u32) -> bool {
    hr.h() == lr.h() * scale as usize && hr.w() == lr.w() * scale as usize
}
