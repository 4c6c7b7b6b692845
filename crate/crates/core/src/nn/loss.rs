use super::tensor::Tensor;
use crate::error::Result;
use crate::scalar::Real;

/// Mean squared error and its gradient `2(p − t)/N`.
pub fn mse_loss<T: Real>(prediction: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    prediction.expect_shape(target.shape())?;
    let n = T::from_usize_lossy(prediction.len().max(1));
    let two = T::lit(2.0);
    let mut loss = T::zero();
    let grad = prediction
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            two * d / n
        })
        .collect();
    Ok((loss / n, Tensor::new(prediction.shape().to_vec(), grad)?))
}
