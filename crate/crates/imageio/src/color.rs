use crate::RgbImage;

/// Single-channel real-valued image.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), h * w, "plane data length");
        Plane { h, w, data }
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Plane {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.w + x] = v;
    }
}

/// Limited-range BT.601 luma: Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255
/// with R,G,B in [0, 255]. Output lies in [16, 235].
pub fn rgb_to_y(img: &RgbImage) -> Plane {
    luma(img, 16.0, 65.481, 128.553, 24.966)
}

/// Full-range luma: Y = 0.299 R + 0.587 G + 0.114 B, output in [0, 255].
pub fn rgb_to_y_full_range(img: &RgbImage) -> Plane {
    luma(img, 0.0, 0.299 * 255.0, 0.587 * 255.0, 0.114 * 255.0)
}

fn luma(img: &RgbImage, offset: f64, cr: f64, cg: f64, cb: f64) -> Plane {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| offset + (cr * p[0] as f64 + cg * p[1] as f64 + cb * p[2] as f64) / 255.0)
        .collect();
    Plane::new(img.h(), img.w(), data)
}
