use rand::Rng;

use super::layers::{Cache, Layer, LayerSpec};
use super::tensor::Tensor;
use crate::error::{usage, Result};
use crate::scalar::Real;

/// Layer stack with a fixed input shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequential<T> {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    layers: Vec<Layer<T>>,
}

/// Per-layer caches recorded by [`Sequential::forward`].
#[derive(Clone, Debug, Default)]
pub struct Trace<T> {
    caches: Vec<Cache<T>>,
}

/// Checks that `specs` compose starting from `input_shape`; returns the final shape.
pub fn infer_shapes(specs: &[LayerSpec], input_shape: &[usize]) -> Result<Vec<usize>> {
    let mut shape = input_shape.to_vec();
    for (i, s) in specs.iter().enumerate() {
        shape = s
            .output_shape(&shape)
            .map_err(|e| usage(format!("layer {i}: {e}")))?;
    }
    Ok(shape)
}

impl<T: Real> Sequential<T> {
    pub fn init<R: Rng + ?Sized>(specs: &[LayerSpec], input_shape: &[usize], rng: &mut R) -> Result<Self> {
        let output_shape = infer_shapes(specs, input_shape)?;
        let layers = specs.iter().map(|s| Layer::init(s.clone(), rng)).collect();
        Ok(Sequential { input_shape: input_shape.to_vec(), output_shape, layers })
    }

    pub fn from_layers(layers: Vec<Layer<T>>, input_shape: &[usize]) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec().clone()).collect();
        let output_shape = infer_shapes(&specs, input_shape)?;
        Ok(Sequential { input_shape: input_shape.to_vec(), output_shape, layers })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec().clone()).collect()
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Trace<T>)> {
        input.expect_shape(&self.input_shape)?;
        input.ensure_finite("network input")?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let (y, cache) = layer.forward(&x)?;
            caches.push(cache);
            x = y;
        }
        x.ensure_finite("network output")?;
        Ok((x, Trace { caches }))
    }

    /// Input gradient plus one gradient per parameter tensor, in [`Self::params`] order.
    pub fn backward(&self, trace: &Trace<T>, upstream: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        if trace.caches.len() != self.layers.len() {
            return Err(usage("backward called without a matching forward pass"));
        }
        upstream.expect_shape(&self.output_shape)?;
        let mut grad = upstream.clone();
        let mut per_layer = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&trace.caches).rev() {
            let (g, params) = layer.backward(cache, &grad)?;
            per_layer.push(params);
            grad = g;
        }
        per_layer.reverse();
        Ok((grad, per_layer.into_iter().flatten().collect()))
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn zero_grads(&self) -> Vec<Tensor<T>> {
        self.params().iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Replaces all parameters; shapes must match.
    pub fn load_params(&mut self, values: Vec<Tensor<T>>) -> Result<()> {
        let mut targets = self.params_mut();
        if targets.len() != values.len() {
            return Err(usage(format!(
                "network has {} parameter tensors, got {}",
                targets.len(),
                values.len()
            )));
        }
        for (t, v) in targets.iter().zip(&values) {
            v.expect_shape(t.shape())?;
        }
        for (t, v) in targets.iter_mut().zip(values) {
            **t = v;
        }
        Ok(())
    }
}
