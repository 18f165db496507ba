//! PNG I/O, luma conversion, bicubic resampling, and dataset preparation.

mod color;
mod dataset;
mod image_rgb;
mod resize;

pub use color::{rgb_to_y, rgb_to_y_full_range, Plane};
pub use dataset::{
    prepare_dataset, sizes_align, DatasetManifest, ManifestItem, PrepareOutcome,
    SUPPORTED_DATASET_SCALES,
};
pub use image_rgb::{load_png, save_png, RgbImage};
pub use resize::{bicubic_resize, cubic_kernel, resample_taps};

pub type Result<T> = std::result::Result<T, ImageError>;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {detail}")]
    Decode { path: String, detail: String },

    #[error("{path}: unsupported format: {detail}")]
    Unsupported { path: String, detail: String },

    #[error("bad image dimensions: {0}")]
    BadDimensions(String),

    #[error("no usable images in {dir}")]
    EmptyDataset { dir: String },

    #[error("duplicate image stem {stem:?}")]
    DuplicateStem { stem: String },

    #[error("manifest references a missing file: {path}")]
    MissingFile { path: String },

    #[error("manifest {path}: {detail}")]
    Manifest { path: String, detail: String },

    #[error("invalid scales: {0}")]
    InvalidScales(String),
}

impl ImageError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ImageError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
