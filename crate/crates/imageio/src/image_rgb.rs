use std::path::Path;

use crate::{ImageError, Result};

/// 8-bit RGB image, samples interleaved R,G,B in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    h: usize,
    w: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(h: usize, w: usize, data: Vec<u8>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(ImageError::BadDimensions(format!("{h}x{w}")));
        }
        if data.len() != 3 * h * w {
            return Err(ImageError::BadDimensions(format!(
                "{h}x{w} needs {} samples, got {}",
                3 * h * w,
                data.len()
            )));
        }
        Ok(RgbImage { h, w, data })
    }

    pub fn filled(h: usize, w: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * h * w);
        for _ in 0..h * w {
            data.extend_from_slice(&rgb);
        }
        RgbImage { h, w, data }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = 3 * (y * self.w + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.w + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// The top-left `new_h` x `new_w` region.
    pub fn crop_top_left(&self, new_h: usize, new_w: usize) -> Result<Self> {
        if new_h == 0 || new_w == 0 || new_h > self.h || new_w > self.w {
            return Err(ImageError::BadDimensions(format!(
                "cannot crop {}x{} to {new_h}x{new_w}",
                self.h, self.w
            )));
        }
        let mut data = Vec::with_capacity(3 * new_h * new_w);
        for y in 0..new_h {
            let row = 3 * y * self.w;
            data.extend_from_slice(&self.data[row..row + 3 * new_w]);
        }
        Ok(RgbImage {
            h: new_h,
            w: new_w,
            data,
        })
    }
}

/// Loads an 8-bit PNG. Grayscale expands to R = G = B; an alpha channel is
/// dropped; 16-bit files are rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)
        .map_err(|e| ImageError::io(path, e))?
        .decode()
        .map_err(|e| ImageError::Decode {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;

    use image::DynamicImage as D;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data = match decoded {
        D::ImageRgb8(buf) => buf.into_raw(),
        D::ImageRgba8(buf) => buf.pixels().flat_map(|p| [p.0[0], p.0[1], p.0[2]]).collect(),
        D::ImageLuma8(buf) => buf.pixels().flat_map(|p| [p.0[0]; 3]).collect(),
        D::ImageLumaA8(buf) => buf.pixels().flat_map(|p| [p.0[0]; 3]).collect(),
        D::ImageLuma16(_) | D::ImageLumaA16(_) | D::ImageRgb16(_) | D::ImageRgba16(_) => {
            return Err(ImageError::Unsupported {
                path: path.display().to_string(),
                detail: "16-bit samples; only 8-bit images are supported".into(),
            })
        }
        other => {
            return Err(ImageError::Unsupported {
                path: path.display().to_string(),
                detail: format!("unhandled pixel layout {:?}", other.color()),
            })
        }
    };
    RgbImage::new(h, w, data)
}

/// Writes an image as 8-bit RGB PNG. Deterministic: the same image always
/// produces the same bytes.
pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| ImageError::io(dir, e))?;
        }
    }
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.w as u32, img.h as u32, img.data.clone())
            .expect("dimensions validated at construction");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| ImageError::Decode {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
}
