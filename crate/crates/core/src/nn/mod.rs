//! Small convolutional network toolkit with hand-written backward passes.

mod adam;
mod layers;
mod loss;
mod network;
mod tensor;
pub mod weights;

pub use adam::{Adam, AdamConfig};
pub use layers::{conv_out, tconv_out, Cache, Layer, LayerSpec};
pub use loss::mse_loss;
pub use network::{infer_shapes, Sequential, Trace};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conv(i: usize, o: usize, k: usize, s: usize, p: usize) -> LayerSpec {
        LayerSpec::Conv2d { in_channels: i, out_channels: o, kernel: k, stride: s, padding: p }
    }

    fn ramp(shape: &[usize]) -> Tensor<f64> {
        let n: usize = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero_map() {
        let spec = conv(1, 1, 3, 1, 0);
        let layer = Layer::with_params(spec, vec![Tensor::zeros(&[1, 1, 3, 3]), Tensor::zeros(&[1])]).unwrap();
        let (y, _) = layer.forward(&ramp(&[1, 5, 5])).unwrap();
        assert_eq!(y.shape(), &[1, 3, 3]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        let mut k = Tensor::zeros(&[1, 1, 3, 3]);
        k.data_mut()[4] = 1.0;
        let layer = Layer::with_params(conv(1, 1, 3, 1, 1), vec![k, Tensor::zeros(&[1])]).unwrap();
        let x = ramp(&[1, 5, 5]);
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn dense_hand_computation() {
        let spec = LayerSpec::Dense { inputs: 2, outputs: 2 };
        let w = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let layer = Layer::with_params(spec, vec![w, Tensor::zeros(&[2])]).unwrap();
        let (y, _) = layer.forward(&Tensor::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 7.0]);
    }

    #[test]
    fn leaky_relu_derivative() {
        let layer = Layer::<f64>::with_params(LayerSpec::LeakyRelu { negative_slope: 0.01 }, vec![]).unwrap();
        let (_, cache) = layer.forward(&Tensor::from_vec(vec![-1.0, 2.0])).unwrap();
        let (dx, _) = layer.backward(&cache, &Tensor::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(dx.data(), &[0.01, 1.0]);
    }

    #[test]
    fn shape_mismatch_mentions_both_shapes() {
        let layer = Layer::<f64>::init(conv(2, 4, 3, 1, 1), &mut ChaCha8Rng::seed_from_u64(0));
        let err = layer.forward(&ramp(&[1, 5, 5])).unwrap_err().to_string();
        assert!(err.contains("[2, H, W]") && err.contains("[1, 5, 5]"), "{err}");
    }

    #[test]
    fn backward_without_forward_is_rejected() {
        let specs = [LayerSpec::Dense { inputs: 3, outputs: 2 }, LayerSpec::Sigmoid];
        let net = Sequential::<f64>::init(&specs, &[3], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let err = net.backward(&Trace::default(), &Tensor::zeros(&[2]));
        assert!(matches!(err, Err(crate::Error::Usage(_))));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let specs = [LayerSpec::Sigmoid];
        let net = Sequential::<f64>::init(&specs, &[2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x = Tensor::from_vec(vec![f64::NAN, 0.0]);
        assert!(matches!(net.forward(&x), Err(crate::Error::NonFinite(_))));
    }

    #[test]
    fn conv_shape_algebra() {
        assert_eq!(conv_out(28, 3, 2, 1), Some(14));
        assert_eq!(conv_out(14, 3, 2, 1), Some(7));
        assert_eq!(conv_out(7, 7, 1, 0), Some(1));
        assert_eq!(tconv_out(1, 7, 1, 0, 0), Some(7));
        assert_eq!(tconv_out(7, 3, 2, 1, 1), Some(14));
        assert_eq!(tconv_out(14, 3, 2, 1, 1), Some(28));
        assert_eq!(conv_out(2, 3, 1, 0), None);
    }

    #[test]
    fn identity_conv_then_tconv_round_trips() {
        let mut k = Tensor::zeros(&[1, 1, 3, 3]);
        k.data_mut()[4] = 1.0;
        let c = Layer::with_params(conv(1, 1, 3, 1, 1), vec![k.clone(), Tensor::zeros(&[1])]).unwrap();
        let t = Layer::with_params(
            LayerSpec::Tconv2d { in_channels: 1, out_channels: 1, kernel: 3, stride: 1, padding: 1, output_padding: 0 },
            vec![k, Tensor::zeros(&[1])],
        )
        .unwrap();
        let x = ramp(&[1, 6, 6]);
        let (y, _) = c.forward(&x).unwrap();
        let (z, _) = t.forward(&y).unwrap();
        for (a, b) in z.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mse_examples() {
        let a = Tensor::from_vec(vec![0.3, -0.2, 0.9]);
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
        let (l, g) = mse_loss(&Tensor::from_vec(vec![1.0, 0.0]), &Tensor::from_vec(vec![0.0, 0.0])).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(g.data(), &[1.0, 0.0]);
        assert!(mse_loss(&Tensor::from_vec(vec![1.0]), &Tensor::from_vec(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut adam = Adam::new(AdamConfig::default());
        let mut p = Tensor::from_vec(vec![0.5, -1.5]);
        adam.step(&mut [&mut p], &[Tensor::zeros(&[2])]).unwrap();
        assert_eq!(p.data(), &[0.5, -1.5]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // t = 1: m̂ = g, v̂ = g², so the update is lr · g/(|g| + ε).
        let mut adam = Adam::new(AdamConfig { learning_rate: 0.1, ..AdamConfig::default() });
        let mut p = Tensor::from_vec(vec![2.0f64]);
        adam.step(&mut [&mut p], &[Tensor::from_vec(vec![1.0])]).unwrap();
        let expected = 2.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p.data()[0] - expected).abs() < 1e-15);
        assert!((p.data()[0] - 1.9).abs() < 1e-6);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut adam = Adam::new(AdamConfig::<f64>::default());
            let mut p = Tensor::from_vec(vec![0.1, 0.2, 0.3]);
            for k in 0..5 {
                let g = Tensor::from_vec(vec![k as f64, -0.5, 0.25 * k as f64]);
                adam.step(&mut [&mut p], &[g]).unwrap();
            }
            p
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn weights_round_trip_and_truncation() {
        let a = ramp(&[2, 3]);
        let b = Tensor::from_vec(vec![1.0, -2.0]);
        let mut buf = Vec::new();
        weights::write_tensors(&mut buf, &[&a, &b]).unwrap();
        assert_eq!(&buf[..8], weights::WEIGHTS_MAGIC);
        let back: Vec<Tensor<f64>> = weights::read_tensors(&mut buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(
            weights::read_tensors::<f64, _>(&mut &cut[..]),
            Err(crate::Error::Parse { .. })
        ));
    }
}
