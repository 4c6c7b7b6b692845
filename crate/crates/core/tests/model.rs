use qcae_core::model::{mnist_decoder, mnist_encoder};
use qcae_core::nn::mse_loss;
use qcae_core::*;

fn image(seed: u64) -> Tensor64 {
    let data = (0..784).map(|i| (((i as u64 * 31 + seed * 17) % 97) as f64 / 96.0).powi(2)).collect();
    Tensor64::new(vec![1, 28, 28], data).unwrap()
}

#[test]
fn latent_contract_for_ours() {
    for n in 1..=5 {
        for p in 1..=4 {
            let spec = ModelSpec::mnist(ModelKind::Qcae, QuantumSpec::new(n, p, CircuitFamily::Ours, true));
            assert_eq!(spec.encoder_width(), 2 * p);
            let m = Autoencoder64::init(spec, 0).unwrap();
            let (_, trace) = m.forward(&image(n as u64), 0).unwrap();
            assert_eq!(trace.angles.len(), 2 * p);
            assert_eq!(trace.latent.len(), n);
            assert!(trace.latent.iter().all(|z| (-1.0..=1.0).contains(z)));
            assert!(trace.angles.iter().all(|a| (0.0..=2.0 * std::f64::consts::PI).contains(a)));
        }
    }
}

fn small_run(kind: ModelKind, seed: u64) -> Vec<RunRecord> {
    let spec = ModelSpec::mnist(kind, QuantumSpec::new(3, 1, CircuitFamily::Ours, true));
    let mut m = Autoencoder64::init(spec, seed).unwrap();
    let clean: Vec<_> = (0..6).map(image).collect();
    let noisy = data::noisy_copies(&clean, NoiseSpec { sigma: 0.3, seed }).unwrap();
    let set = DenoisingSet::new(noisy, clean).unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 4, seed, sigma: 0.3, learning_rate: 3e-3, sample_limit: 6 };
    train(&mut m, &cfg, &set, &set, "det", |_| {}).unwrap()
}

#[test]
fn training_is_deterministic() {
    for kind in [ModelKind::Ccae, ModelKind::Qcae] {
        let a = small_run(kind, 9);
        let b = small_run(kind, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_ne!(a, small_run(kind, 10));
    }
}

#[test]
fn ccae_is_plain_encode_decode_with_l2() {
    let spec = ModelSpec::mnist(ModelKind::Ccae, QuantumSpec::new(4, 1, CircuitFamily::Ours, true));
    let m = Autoencoder64::init(spec, 2).unwrap();
    let x = image(4);
    let target = image(5);

    // Rebuild E and D by hand from the same weights.
    let enc_layers = m.encoder().layers().to_vec();
    let dec_layers = m.decoder().layers().to_vec();
    let enc = Sequential::from_layers(enc_layers, &[1, 28, 28]).unwrap();
    let dec = Sequential::from_layers(dec_layers, &[4]).unwrap();
    assert_eq!(enc.specs(), mnist_encoder(4));
    assert_eq!(dec.specs(), mnist_decoder(4));
    let (z, _) = enc.forward(&x).unwrap();
    let (xhat, _) = dec.forward(&z).unwrap();

    let (out, _) = m.forward(&x, 0).unwrap();
    assert_eq!(out, xhat);
    let (l_model, grads) = m.loss_and_gradients(&x, &target, 0).unwrap();
    let sq: f64 = xhat.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    assert!((l_model - sq / 784.0).abs() < 1e-15);
    assert_eq!(l_model, mse_loss(&xhat, &target).unwrap().0);
    assert!(grads.quantum.is_empty());
}

#[test]
fn f32_model_runs() {
    let spec = ModelSpec::mnist(ModelKind::Qcae, QuantumSpec::new(2, 1, CircuitFamily::B, true));
    let m = Autoencoder32::init(spec, 1).unwrap();
    let x = Tensor32::filled(&[1, 28, 28], 0.4);
    let (loss, g) = m.loss_and_gradients(&x, &x, 0).unwrap();
    assert!(loss.is_finite() && loss > 0.0);
    assert_eq!(g.quantum.len(), CircuitFamily::B.slot_count(2, 1));
}

#[test]
fn noisy_simulator_is_reproducible_per_stream() {
    let mut q = QuantumSpec::new(3, 2, CircuitFamily::Ours, true);
    q.noise = NoiseChannel { depolarizing_prob: 0.05, readout_flip_prob: 0.02 };
    q.noise_seed = 77;
    let m = Autoencoder64::init(ModelSpec::mnist(ModelKind::Qcae, q), 0).unwrap();
    let x = image(1);
    let (a, _) = m.forward(&x, 5).unwrap();
    let (b, _) = m.forward(&x, 5).unwrap();
    assert_eq!(a, b);
}
