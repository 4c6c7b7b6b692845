use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{usage, Result};
use crate::scalar::Real;

/// Layer description. Image tensors are `[channels, height, width]`, vectors `[features]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Tconv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        #[serde(default)]
        output_padding: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
    LeakyRelu {
        negative_slope: f64,
    },
    Sigmoid,
    Flatten,
    Reshape {
        shape: Vec<usize>,
    },
}

/// `floor((size + 2·padding − kernel)/stride) + 1`, or `None` when the kernel does not fit.
pub fn conv_out(size: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    (size + 2 * padding).checked_sub(kernel).map(|d| d / stride + 1)
}

/// `(size − 1)·stride − 2·padding + kernel + output_padding`.
pub fn tconv_out(size: usize, kernel: usize, stride: usize, padding: usize, output_padding: usize) -> Option<usize> {
    ((size.checked_sub(1)?) * stride + kernel + output_padding).checked_sub(2 * padding)
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Tconv2d { .. } => "tconv2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::LeakyRelu { .. } => "leaky_relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Reshape { .. } => "reshape",
        }
    }

    /// Output shape for `input`, or a usage error naming both shapes.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |expected: String| {
            usage(format!(
                "{} expects input {expected}, got {input:?}",
                self.name()
            ))
        };
        match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, padding } => {
                check_hyper(kernel, stride)?;
                match input {
                    &[c, h, w] if c == in_channels => {
                        let oh = conv_out(h, kernel, stride, padding);
                        let ow = conv_out(w, kernel, stride, padding);
                        match (oh, ow) {
                            (Some(oh), Some(ow)) => Ok(vec![out_channels, oh, ow]),
                            _ => Err(mismatch(format!("at least {kernel}x{kernel} after padding"))),
                        }
                    }
                    _ => Err(mismatch(format!("[{in_channels}, H, W]"))),
                }
            }
            LayerSpec::Tconv2d { in_channels, out_channels, kernel, stride, padding, output_padding } => {
                check_hyper(kernel, stride)?;
                if output_padding >= stride {
                    return Err(usage("tconv2d output_padding must be smaller than stride"));
                }
                match input {
                    &[c, h, w] if c == in_channels && h > 0 && w > 0 => {
                        let oh = tconv_out(h, kernel, stride, padding, output_padding);
                        let ow = tconv_out(w, kernel, stride, padding, output_padding);
                        match (oh, ow) {
                            (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok(vec![out_channels, oh, ow]),
                            _ => Err(mismatch("a size leaving a positive output".into())),
                        }
                    }
                    _ => Err(mismatch(format!("[{in_channels}, H, W]"))),
                }
            }
            LayerSpec::Dense { inputs, outputs } => match input {
                &[n] if n == inputs => Ok(vec![outputs]),
                _ => Err(mismatch(format!("[{inputs}]"))),
            },
            LayerSpec::LeakyRelu { .. } | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Reshape { ref shape } => {
                if shape.iter().product::<usize>() == input.iter().product::<usize>() {
                    Ok(shape.clone())
                } else {
                    Err(mismatch(format!("{} elements", shape.iter().product::<usize>())))
                }
            }
        }
    }

    /// Parameter tensor shapes: weight then bias.
    pub fn parameter_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel, .. } => {
                vec![vec![out_channels, in_channels, kernel, kernel], vec![out_channels]]
            }
            LayerSpec::Tconv2d { in_channels, out_channels, kernel, .. } => {
                vec![vec![in_channels, out_channels, kernel, kernel], vec![out_channels]]
            }
            LayerSpec::Dense { inputs, outputs } => vec![vec![outputs, inputs], vec![outputs]],
            _ => Vec::new(),
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Conv2d { in_channels, kernel, .. } => in_channels * kernel * kernel,
            // same convention as conv over the weight's second axis
            LayerSpec::Tconv2d { out_channels, kernel, .. } => out_channels * kernel * kernel,
            LayerSpec::Dense { inputs, .. } => inputs,
            _ => 1,
        }
    }
}

fn check_hyper(kernel: usize, stride: usize) -> Result<()> {
    if kernel < 1 || stride < 1 {
        return Err(usage(format!("kernel ({kernel}) and stride ({stride}) must be >= 1")));
    }
    Ok(())
}

/// What a layer keeps from its forward pass.
#[derive(Clone, Debug)]
pub enum Cache<T> {
    Input(Tensor<T>),
    Output(Tensor<T>),
    Shape(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    spec: LayerSpec,
    params: Vec<Tensor<T>>,
}

impl<T: Real> Layer<T> {
    /// Weights uniform in `±sqrt(1/fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Self {
        let bound = (1.0 / spec.fan_in() as f64).sqrt();
        let params = spec
            .parameter_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, shape)| {
                let mut t = Tensor::zeros(&shape);
                if i == 0 {
                    for w in t.data_mut() {
                        *w = T::lit(rng.random_range(-bound..=bound));
                    }
                }
                t
            })
            .collect();
        Layer { spec, params }
    }

    pub fn with_params(spec: LayerSpec, params: Vec<Tensor<T>>) -> Result<Self> {
        let shapes = spec.parameter_shapes();
        if shapes.len() != params.len() {
            return Err(usage(format!(
                "{} takes {} parameter tensors, got {}",
                spec.name(),
                shapes.len(),
                params.len()
            )));
        }
        for (s, p) in shapes.iter().zip(&params) {
            p.expect_shape(s)?;
        }
        Ok(Layer { spec, params })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.params
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Cache<T>)> {
        let out_shape = self.spec.output_shape(input.shape())?;
        let x = input.data();
        match self.spec {
            LayerSpec::Conv2d { stride, padding, .. } => {
                let out = conv2d(input, &self.params[0], &self.params[1], stride, padding, &out_shape);
                Ok((out, Cache::Input(input.clone())))
            }
            LayerSpec::Tconv2d { stride, padding, .. } => {
                let out = tconv2d(input, &self.params[0], &self.params[1], stride, padding, &out_shape);
                Ok((out, Cache::Input(input.clone())))
            }
            LayerSpec::Dense { inputs, outputs } => {
                let (w, b) = (self.params[0].data(), self.params[1].data());
                let y = (0..outputs)
                    .map(|o| {
                        let row = &w[o * inputs..(o + 1) * inputs];
                        b[o] + row.iter().zip(x).map(|(&a, &v)| a * v).sum::<T>()
                    })
                    .collect();
                Ok((Tensor::new(out_shape, y)?, Cache::Input(input.clone())))
            }
            LayerSpec::LeakyRelu { negative_slope } => {
                let s = T::lit(negative_slope);
                let y = input.map(|v| if v > T::zero() { v } else { s * v });
                Ok((y, Cache::Input(input.clone())))
            }
            LayerSpec::Sigmoid => {
                let y = input.map(|v| T::one() / (T::one() + (-v).exp()));
                Ok((y.clone(), Cache::Output(y)))
            }
            LayerSpec::Flatten | LayerSpec::Reshape { .. } => Ok((
                input.clone().reshape(&out_shape)?,
                Cache::Shape(input.shape().to_vec()),
            )),
        }
    }

    /// Input gradient and parameter gradients (same order as `params`).
    pub fn backward(&self, cache: &Cache<T>, upstream: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        match (&self.spec, cache) {
            (LayerSpec::Conv2d { stride, padding, .. }, Cache::Input(x)) => {
                upstream.expect_shape(&self.spec.output_shape(x.shape())?)?;
                Ok(conv2d_backward(x, &self.params[0], upstream, *stride, *padding))
            }
            (LayerSpec::Tconv2d { stride, padding, .. }, Cache::Input(x)) => {
                upstream.expect_shape(&self.spec.output_shape(x.shape())?)?;
                Ok(tconv2d_backward(x, &self.params[0], upstream, *stride, *padding))
            }
            (LayerSpec::Dense { inputs, outputs }, Cache::Input(x)) => {
                upstream.expect_shape(&[*outputs])?;
                let w = self.params[0].data();
                let up = upstream.data();
                let mut dx = vec![T::zero(); *inputs];
                let mut dw = vec![T::zero(); inputs * outputs];
                for o in 0..*outputs {
                    let g = up[o];
                    for i in 0..*inputs {
                        dx[i] += g * w[o * inputs + i];
                        dw[o * inputs + i] = g * x.data()[i];
                    }
                }
                Ok((
                    Tensor::new(vec![*inputs], dx)?,
                    vec![Tensor::new(vec![*outputs, *inputs], dw)?, upstream.clone()],
                ))
            }
            (LayerSpec::LeakyRelu { negative_slope }, Cache::Input(x)) => {
                upstream.expect_shape(x.shape())?;
                let s = T::lit(*negative_slope);
                let dx = x
                    .data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(&v, &g)| if v > T::zero() { g } else { s * g })
                    .collect();
                Ok((Tensor::new(x.shape().to_vec(), dx)?, Vec::new()))
            }
            (LayerSpec::Sigmoid, Cache::Output(y)) => {
                upstream.expect_shape(y.shape())?;
                let dx = y
                    .data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(&s, &g)| g * s * (T::one() - s))
                    .collect();
                Ok((Tensor::new(y.shape().to_vec(), dx)?, Vec::new()))
            }
            (LayerSpec::Flatten | LayerSpec::Reshape { .. }, Cache::Shape(shape)) => {
                Ok((upstream.clone().reshape(shape)?, Vec::new()))
            }
            (spec, _) => Err(usage(format!("{} received a cache from another layer kind", spec.name()))),
        }
    }
}

fn conv2d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
    out_shape: &[usize],
) -> Tensor<T> {
    let (ci, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (co, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let k = weight.shape()[2];
    let (x, wt, b) = (input.data(), weight.data(), bias.data());
    let mut out = vec![T::zero(); co * oh * ow];
    for o in 0..co {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b[o];
                for i in 0..ci {
                    for ky in 0..k {
                        let Some(iy) = (oy * stride + ky).checked_sub(padding).filter(|&v| v < h) else {
                            continue;
                        };
                        for kx in 0..k {
                            let Some(ix) = (ox * stride + kx).checked_sub(padding).filter(|&v| v < w) else {
                                continue;
                            };
                            acc += wt[((o * ci + i) * k + ky) * k + kx] * x[(i * h + iy) * w + ix];
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Tensor { shape: out_shape.to_vec(), data: out }
}

fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    upstream: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> (Tensor<T>, Vec<Tensor<T>>) {
    let (ci, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (co, oh, ow) = (upstream.shape()[0], upstream.shape()[1], upstream.shape()[2]);
    let k = weight.shape()[2];
    let (x, wt, up) = (input.data(), weight.data(), upstream.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); wt.len()];
    let mut db = vec![T::zero(); co];
    for o in 0..co {
        for oy in 0..oh {
            for ox in 0..ow {
                let g = up[(o * oh + oy) * ow + ox];
                db[o] += g;
                for i in 0..ci {
                    for ky in 0..k {
                        let Some(iy) = (oy * stride + ky).checked_sub(padding).filter(|&v| v < h) else {
                            continue;
                        };
                        for kx in 0..k {
                            let Some(ix) = (ox * stride + kx).checked_sub(padding).filter(|&v| v < w) else {
                                continue;
                            };
                            let wi = ((o * ci + i) * k + ky) * k + kx;
                            let xi = (i * h + iy) * w + ix;
                            dw[wi] += g * x[xi];
                            dx[xi] += g * wt[wi];
                        }
                    }
                }
            }
        }
    }
    (
        Tensor { shape: input.shape().to_vec(), data: dx },
        vec![
            Tensor { shape: weight.shape().to_vec(), data: dw },
            Tensor { shape: vec![co], data: db },
        ],
    )
}

fn tconv2d<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    padding: usize,
    out_shape: &[usize],
) -> Tensor<T> {
    let (ci, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (co, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let k = weight.shape()[2];
    let (x, wt, b) = (input.data(), weight.data(), bias.data());
    let mut out = vec![T::zero(); co * oh * ow];
    for o in 0..co {
        out[o * oh * ow..(o + 1) * oh * ow].fill(b[o]);
    }
    for i in 0..ci {
        for iy in 0..h {
            for ix in 0..w {
                let v = x[(i * h + iy) * w + ix];
                for o in 0..co {
                    for ky in 0..k {
                        let Some(y) = (iy * stride + ky).checked_sub(padding).filter(|&v| v < oh) else {
                            continue;
                        };
                        for kx in 0..k {
                            let Some(xx) = (ix * stride + kx).checked_sub(padding).filter(|&v| v < ow) else {
                                continue;
                            };
                            out[(o * oh + y) * ow + xx] += v * wt[((i * co + o) * k + ky) * k + kx];
                        }
                    }
                }
            }
        }
    }
    Tensor { shape: out_shape.to_vec(), data: out }
}

fn tconv2d_backward<T: Real>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    upstream: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> (Tensor<T>, Vec<Tensor<T>>) {
    let (ci, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (co, oh, ow) = (upstream.shape()[0], upstream.shape()[1], upstream.shape()[2]);
    let k = weight.shape()[2];
    let (x, wt, up) = (input.data(), weight.data(), upstream.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); wt.len()];
    let db: Vec<T> = (0..co)
        .map(|o| up[o * oh * ow..(o + 1) * oh * ow].iter().copied().sum())
        .collect();
    for i in 0..ci {
        for iy in 0..h {
            for ix in 0..w {
                let xi = (i * h + iy) * w + ix;
                let v = x[xi];
                let mut acc = T::zero();
                for o in 0..co {
                    for ky in 0..k {
                        let Some(y) = (iy * stride + ky).checked_sub(padding).filter(|&v| v < oh) else {
                            continue;
                        };
                        for kx in 0..k {
                            let Some(xx) = (ix * stride + kx).checked_sub(padding).filter(|&v| v < ow) else {
                                continue;
                            };
                            let g = up[(o * oh + y) * ow + xx];
                            let wi = ((i * co + o) * k + ky) * k + kx;
                            acc += g * wt[wi];
                            dw[wi] += g * v;
                        }
                    }
                }
                dx[xi] = acc;
            }
        }
    }
    (
        Tensor { shape: input.shape().to_vec(), data: dx },
        vec![
            Tensor { shape: weight.shape().to_vec(), data: dw },
            Tensor { shape: vec![co], data: db },
        ],
    )
}
