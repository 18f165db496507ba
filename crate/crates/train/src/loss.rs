use lesr_tensor::{Scalar, Tensor4};

use crate::{Result, TrainError};

/// Mean squared error over a batch and its gradient with respect to `pred`.
///
/// loss = (1 / 2B) Σ ||pred_b − target_b||², grad = (pred − target) / B,
/// where B is the batch size. The sum is accumulated in f64; the loss is 0
/// exactly when `pred == target`.
pub fn mse_loss<T: Scalar>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(f64, Tensor4<T>)> {
    if pred.shape() != target.shape() {
        return Err(TrainError::Shape(format!(
            "loss operands differ: prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let b = pred.shape().n as f64;
    let mut sum = 0.0f64;
    let mut grad = Tensor4::zeros(
        pred.shape().n,
        pred.shape().c,
        pred.shape().h,
        pred.shape().w,
    );
    let g = grad.data_mut();
    for (i, (&p, &t)) in pred.data().iter().zip(target.data()).enumerate() {
        let d = p.to_f64() - t.to_f64();
        sum += d * d;
        g[i] = T::from_f64(d / b);
    }
    Ok((sum / (2.0 * b), grad))
}
