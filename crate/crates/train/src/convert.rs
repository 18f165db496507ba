use lesr_imageio::RgbImage;
use lesr_tensor::{Scalar, Shape4, Tensor4};

use crate::{Result, TrainError};

/// One image as a (1, 3, h, w) tensor with values in [0, 1] (v / 255).
pub fn image_to_tensor<T: Scalar>(img: &RgbImage) -> Tensor4<T> {
    images_to_batch(std::slice::from_ref(img)).expect("single image is always a valid batch")
}

/// Stacks same-sized images into a (b, 3, h, w) tensor with values in [0, 1].
pub fn images_to_batch<T: Scalar>(imgs: &[RgbImage]) -> Result<Tensor4<T>> {
    let first = imgs
        .first()
        .ok_or_else(|| TrainError::Shape("cannot batch zero images".into()))?;
    let (h, w) = (first.h(), first.w());
    let mut data = Vec::with_capacity(imgs.len() * 3 * h * w);
    for img in imgs {
        if (img.h(), img.w()) != (h, w) {
            return Err(TrainError::Shape(format!(
                "cannot batch a {}x{} image with a {}x{} one",
                img.h(),
                img.w(),
                h,
                w
            )));
        }
        let px = img.data();
        for c in 0..3 {
            for i in 0..h * w {
                data.push(T::from_f64(px[3 * i + c] as f64 / 255.0));
            }
        }
    }
    Ok(Tensor4::from_vec(Shape4::new(imgs.len(), 3, h, w), data).expect("sized above"))
}

/// Rounds a [0, 1] intensity to 8 bits, halves away from zero, out-of-range
/// values clamped.
pub fn quantize_unit(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Converts a (b, 3, h, w) tensor in [0, 1] back to images, one per batch
/// item, quantizing with [`quantize_unit`].
pub fn tensor_to_images<T: Scalar>(t: &Tensor4<T>) -> Result<Vec<RgbImage>> {
    let s = t.shape();
    if s.c != 3 {
        return Err(TrainError::Shape(format!(
            "expected 3 channels to form RGB images, got {}",
            s.c
        )));
    }
    let plane = s.h * s.w;
    let data = t.data();
    let mut out = Vec::with_capacity(s.n);
    for b in 0..s.n {
        let base = b * 3 * plane;
        let mut px = vec![0u8; 3 * plane];
        for c in 0..3 {
            for i in 0..plane {
                px[3 * i + c] = quantize_unit(data[base + c * plane + i].to_f64());
            }
        }
        out.push(RgbImage::new(s.h, s.w, px).expect("sized above"));
    }
    Ok(out)
}
