//! Classical (CCAE) and quantum-latent (QCAE) convolutional autoencoders.
//!
//! QCAE forward pass: encoder → raw latent `y` (one value per circuit slot) →
//! `tanh` → affine map of `[-1, 1]` onto `[0, 2π]` → circuit parameters → per-qubit
//! `<Z>` → decoder. The backward pass joins decoder backprop, the parameter-shift
//! Jacobian and encoder backprop.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{normalize_to_angle, CircuitFamily, CircuitTemplate};
use crate::error::{config, usage, Error, Result};
use crate::gradient::{chain_loss_gradient, psr_gradient};
use crate::metrics::{mean_ssim, RunRecord, SsimConfig};
use crate::nn::{infer_shapes, mse_loss, weights, Adam, AdamConfig, LayerSpec, Sequential, Tensor, Trace};
use crate::quantum::{NoiseChannel, Simulator};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ccae,
    Qcae,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ccae => "ccae",
            ModelKind::Qcae => "qcae",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ccae" => Ok(ModelKind::Ccae),
            "qcae" => Ok(ModelKind::Qcae),
            other => Err(config(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumSpec {
    pub n_qubits: usize,
    pub layers: usize,
    pub family: CircuitFamily,
    pub psr_enabled: bool,
    pub noise: NoiseChannel<f64>,
    /// Seed for the depolarizing draws of a noisy simulator.
    pub noise_seed: u64,
    /// Shot-sampled readout instead of exact expectations.
    pub shots: Option<usize>,
}

impl QuantumSpec {
    pub fn new(n_qubits: usize, layers: usize, family: CircuitFamily, psr_enabled: bool) -> Self {
        QuantumSpec {
            n_qubits,
            layers,
            family,
            psr_enabled,
            noise: NoiseChannel::default(),
            noise_seed: 0,
            shots: None,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.family.slot_count(self.n_qubits, self.layers)
    }
}

/// Full architecture description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_shape: Vec<usize>,
    pub encoder: Vec<LayerSpec>,
    pub decoder: Vec<LayerSpec>,
    /// Width of the classical latent (CCAE only).
    pub latent_width: usize,
    pub quantum: QuantumSpec,
}

pub const LEAKY_SLOPE: f64 = 0.01;

fn leaky() -> LayerSpec {
    LayerSpec::LeakyRelu { negative_slope: LEAKY_SLOPE }
}

/// 28×28 encoder: 28 → 14 → 7 → 1 spatially, then a dense projection to `latent`.
pub fn mnist_encoder(latent: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv2d { in_channels: 1, out_channels: 16, kernel: 3, stride: 2, padding: 1 },
        leaky(),
        LayerSpec::Conv2d { in_channels: 16, out_channels: 32, kernel: 3, stride: 2, padding: 1 },
        leaky(),
        LayerSpec::Conv2d { in_channels: 32, out_channels: 64, kernel: 7, stride: 1, padding: 0 },
        LayerSpec::Flatten,
        LayerSpec::Dense { inputs: 64, outputs: latent },
    ]
}

/// Mirror of [`mnist_encoder`] ending in a sigmoid.
pub fn mnist_decoder(latent: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { inputs: latent, outputs: 64 },
        leaky(),
        LayerSpec::Reshape { shape: vec![64, 1, 1] },
        LayerSpec::Tconv2d { in_channels: 64, out_channels: 32, kernel: 7, stride: 1, padding: 0, output_padding: 0 },
        leaky(),
        LayerSpec::Tconv2d { in_channels: 32, out_channels: 16, kernel: 3, stride: 2, padding: 1, output_padding: 1 },
        leaky(),
        LayerSpec::Tconv2d { in_channels: 16, out_channels: 1, kernel: 3, stride: 2, padding: 1, output_padding: 1 },
        LayerSpec::Sigmoid,
    ]
}

impl ModelSpec {
    /// Default MNIST geometry. The CCAE latent width equals `quantum.n_qubits`.
    pub fn mnist(kind: ModelKind, quantum: QuantumSpec) -> Self {
        let (enc_out, dec_in) = match kind {
            ModelKind::Ccae => (quantum.n_qubits, quantum.n_qubits),
            ModelKind::Qcae => (quantum.slot_count(), quantum.n_qubits),
        };
        ModelSpec {
            kind,
            input_shape: vec![1, 28, 28],
            encoder: mnist_encoder(enc_out),
            decoder: mnist_decoder(dec_in),
            latent_width: quantum.n_qubits,
            quantum,
        }
    }

    /// Width the encoder must emit.
    pub fn encoder_width(&self) -> usize {
        match self.kind {
            ModelKind::Ccae => self.latent_width,
            ModelKind::Qcae => self.quantum.slot_count(),
        }
    }

    /// Width the decoder consumes.
    pub fn decoder_width(&self) -> usize {
        match self.kind {
            ModelKind::Ccae => self.latent_width,
            ModelKind::Qcae => self.quantum.n_qubits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ModelKind::Qcae {
            CircuitTemplate::new(self.quantum.family, self.quantum.n_qubits, self.quantum.layers)?;
            self.quantum.noise.validate()?;
        }
        if self.latent_width == 0 {
            return Err(config("latent_width must be positive"));
        }
        let enc = infer_shapes(&self.encoder, &self.input_shape).map_err(|e| config(format!("encoder: {e}")))?;
        if enc != [self.encoder_width()] {
            return Err(config(format!(
                "encoder emits {enc:?}, the {} latent needs [{}]",
                self.kind,
                self.encoder_width()
            )));
        }
        let dec = infer_shapes(&self.decoder, &[self.decoder_width()])
            .map_err(|e| config(format!("decoder: {e}")))?;
        if dec != self.input_shape {
            return Err(config(format!(
                "decoder emits {dec:?}, expected the input shape {:?}",
                self.input_shape
            )));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    encoder: Trace<T>,
    decoder: Trace<T>,
    /// `tanh` of the encoder output (QCAE).
    squashed: Vec<T>,
    /// Bound circuit parameters (QCAE).
    pub angles: Vec<T>,
    /// Decoder input: per-qubit `<Z>` (QCAE) or the raw latent (CCAE).
    pub latent: Vec<T>,
    stream: u64,
}

#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub encoder: Vec<Tensor<T>>,
    pub decoder: Vec<Tensor<T>>,
    /// Loss gradient w.r.t. the circuit parameters (empty for CCAE).
    pub quantum: Vec<T>,
    pub circuit_executions: usize,
}

impl<T: Real> Gradients<T> {
    /// Parameter gradients in [`Autoencoder::params_mut`] order.
    pub fn into_flat(self) -> Vec<Tensor<T>> {
        self.encoder.into_iter().chain(self.decoder).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Autoencoder<T> {
    spec: ModelSpec,
    encoder: Sequential<T>,
    decoder: Sequential<T>,
    quantum: Option<(CircuitTemplate, Simulator<T>)>,
}

impl<T: Real> Autoencoder<T> {
    /// Fresh weights from `seed`.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Sequential::init(&spec.encoder, &spec.input_shape, &mut rng)?;
        let decoder = Sequential::init(&spec.decoder, &[spec.decoder_width()], &mut rng)?;
        let quantum = match spec.kind {
            ModelKind::Ccae => None,
            ModelKind::Qcae => {
                let q = &spec.quantum;
                let template = CircuitTemplate::new(q.family, q.n_qubits, q.layers)?;
                let noise = NoiseChannel {
                    depolarizing_prob: T::lit(q.noise.depolarizing_prob),
                    readout_flip_prob: T::lit(q.noise.readout_flip_prob),
                };
                let sim = Simulator::new(q.n_qubits)?
                    .with_noise(noise, q.noise_seed)?
                    .with_shots(q.shots)?;
                Some((template, sim))
            }
        };
        Ok(Autoencoder { spec, encoder, decoder, quantum })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn encoder(&self) -> &Sequential<T> {
        &self.encoder
    }

    pub fn decoder(&self) -> &Sequential<T> {
        &self.decoder
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut p = self.encoder.params_mut();
        p.extend(self.decoder.params_mut());
        p
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut p = self.encoder.params();
        p.extend(self.decoder.params());
        p
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    /// Per-qubit `<Z>` for explicit circuit parameters.
    pub fn latent_expectations(&self, angles: &[T], stream: u64) -> Result<Vec<T>> {
        let (template, sim) = self
            .quantum
            .as_ref()
            .ok_or_else(|| usage("classical model has no quantum latent"))?;
        sim.expectations(&template.bind(angles)?.gates, stream)
    }

    /// Maps raw encoder outputs to circuit parameters: `π·(tanh(y) + 1)`.
    pub fn angles_for(raw: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let squashed: Vec<T> = raw.iter().map(|v| v.tanh()).collect();
        let angles = normalize_to_angle(&squashed, -T::one(), T::one())?;
        Ok((squashed, angles))
    }

    /// Reconstruction of `input`. `stream` only matters for noisy or sampled simulators.
    pub fn forward(&self, input: &Tensor<T>, stream: u64) -> Result<(Tensor<T>, ForwardTrace<T>)> {
        let (y, enc_trace) = self.encoder.forward(input)?;
        let raw = y.into_data();
        let (squashed, angles, latent) = match &self.quantum {
            None => (Vec::new(), Vec::new(), raw),
            Some(_) => {
                let (squashed, angles) = Self::angles_for(&raw)?;
                let z = self.latent_expectations(&angles, stream)?;
                (squashed, angles, z)
            }
        };
        let (out, dec_trace) = self.decoder.forward(&Tensor::from_vec(latent.clone()))?;
        Ok((
            out,
            ForwardTrace { encoder: enc_trace, decoder: dec_trace, squashed, angles, latent, stream },
        ))
    }

    pub fn backward(&self, trace: &ForwardTrace<T>, loss_grad: &Tensor<T>) -> Result<Gradients<T>> {
        let (dz, decoder) = self.decoder.backward(&trace.decoder, loss_grad)?;
        match &self.quantum {
            None => {
                let (_, encoder) = self.encoder.backward(&trace.encoder, &dz)?;
                Ok(Gradients { encoder, decoder, quantum: Vec::new(), circuit_executions: 0 })
            }
            Some((template, sim)) => {
                if !self.spec.quantum.psr_enabled {
                    return Ok(Gradients {
                        encoder: self.encoder.zero_grads(),
                        decoder,
                        quantum: vec![T::zero(); trace.angles.len()],
                        circuit_executions: 0,
                    });
                }
                let psr = psr_gradient(sim, template, &trace.angles, &[], trace.stream)?;
                let d_angles = chain_loss_gradient(&psr.jacobian, dz.data())?;
                // dθ/dy = π · (1 − tanh²(y))
                let pi = T::PI();
                let dy: Vec<T> = d_angles
                    .iter()
                    .zip(&trace.squashed)
                    .map(|(&g, &u)| g * pi * (T::one() - u * u))
                    .collect();
                let (_, encoder) = self.encoder.backward(&trace.encoder, &Tensor::from_vec(dy))?;
                Ok(Gradients { encoder, decoder, quantum: d_angles, circuit_executions: psr.executions })
            }
        }
    }

    /// Reconstruction loss against `target` and all gradients.
    pub fn loss_and_gradients(&self, input: &Tensor<T>, target: &Tensor<T>, stream: u64) -> Result<(T, Gradients<T>)> {
        let (out, trace) = self.forward(input, stream)?;
        let (loss, grad) = mse_loss(&out, target)?;
        Ok((loss, self.backward(&trace, &grad)?))
    }

    /// Single forward pass clamped to `[0, 1]`.
    pub fn denoise(&self, noisy: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward(noisy, EVAL_STREAM)?.0.clamp(T::zero(), T::one()))
    }

    pub fn denoise_batch(&self, images: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        images
            .par_iter()
            .enumerate()
            .map(|(i, im)| Ok(self.forward(im, EVAL_STREAM + ((i as u64) << 16))?.0.clamp(T::zero(), T::one())))
            .collect()
    }

    pub fn save_weights(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        weights::write_tensors(&mut out, &self.params())?;
        Ok(())
    }

    pub fn load_weights(&mut self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(usage(format!("weights file {} not found", path.display())));
        }
        let mut tensors = weights::read_tensors::<T, _>(&mut fs::File::open(path)?)?;
        let n_enc = self.encoder.params().len();
        if tensors.len() != n_enc + self.decoder.params().len() {
            return Err(usage(format!(
                "weights file holds {} tensors, model needs {}",
                tensors.len(),
                n_enc + self.decoder.params().len()
            )));
        }
        let dec = tensors.split_off(n_enc);
        self.encoder.load_params(tensors)?;
        self.decoder.load_params(dec)
    }

    pub fn from_weights(spec: ModelSpec, path: &Path) -> Result<Self> {
        let mut m = Self::init(spec, 0)?;
        m.load_weights(path)?;
        Ok(m)
    }
}

const EVAL_STREAM: u64 = 1 << 62;

fn train_stream(epoch: usize, index: usize) -> u64 {
    ((epoch as u64 + 1) << 44) | ((index as u64) << 16)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub sigma: f64,
    pub learning_rate: f64,
    pub sample_limit: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, batch_size: 16, seed: 0, sigma: 0.5, learning_rate: 1e-3, sample_limit: 2000 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(config("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(config("batch_size must be >= 1"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(config("sigma must be >= 0"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(config("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Noisy inputs paired with clean targets.
#[derive(Clone, Debug)]
pub struct DenoisingSet<T> {
    pub noisy: Vec<Tensor<T>>,
    pub clean: Vec<Tensor<T>>,
}

impl<T: Real> DenoisingSet<T> {
    pub fn new(noisy: Vec<Tensor<T>>, clean: Vec<Tensor<T>>) -> Result<Self> {
        if noisy.len() != clean.len() {
            return Err(usage(format!("{} noisy vs {} clean images", noisy.len(), clean.len())));
        }
        Ok(DenoisingSet { noisy, clean })
    }

    pub fn len(&self) -> usize {
        self.noisy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy.is_empty()
    }
}

/// Trains in place with Adam on MSE(reconstruction(noisy), clean) and returns one
/// record per epoch. `on_epoch` sees each record as it is produced.
pub fn train<T: Real>(
    model: &mut Autoencoder<T>,
    cfg: &TrainConfig,
    train_set: &DenoisingSet<T>,
    validation: &DenoisingSet<T>,
    config_id: &str,
    mut on_epoch: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(usage("training set is empty"));
    }
    let mut adam = Adam::new(AdamConfig { learning_rate: T::lit(cfg.learning_rate), ..AdamConfig::default() });
    let ssim_cfg = SsimConfig::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(T, Vec<Tensor<T>>)> = batch
                .par_iter()
                .map(|&i| {
                    let (l, g) = model.loss_and_gradients(
                        &train_set.noisy[i],
                        &train_set.clean[i],
                        train_stream(epoch, i),
                    )?;
                    Ok((l, g.into_flat()))
                })
                .collect::<Result<_>>()?;
            let mut iter = results.into_iter();
            let (first_loss, mut acc) = iter.next().expect("nonempty batch");
            let mut batch_loss = first_loss;
            for (l, g) in iter {
                batch_loss += l;
                for (a, t) in acc.iter_mut().zip(&g) {
                    a.add_assign(t)?;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "epoch {epoch}, batch {b}: loss {batch_loss}; last completed epoch {}",
                    epoch - 1
                )));
            }
            let inv = T::one() / T::from_usize_lossy(batch.len());
            for a in &mut acc {
                a.scale(inv);
            }
            adam.step(&mut model.params_mut(), &acc)?;
            loss_sum += batch_loss.as_f64();
        }
        let val_ssim = if validation.is_empty() {
            f64::NAN
        } else {
            let recon = model.denoise_batch(&validation.noisy)?;
            mean_ssim(&recon, &validation.clean, &ssim_cfg)?
        };
        let record = RunRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_ssim,
            config_id: config_id.to_string(),
        };
        on_epoch(&record);
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qspec(n: usize, p: usize) -> QuantumSpec {
        QuantumSpec::new(n, p, CircuitFamily::Ours, true)
    }

    #[test]
    fn default_geometry_validates() {
        for kind in [ModelKind::Ccae, ModelKind::Qcae] {
            ModelSpec::mnist(kind, qspec(4, 2)).validate().unwrap();
        }
        for family in CircuitFamily::ALL {
            let spec = ModelSpec::mnist(ModelKind::Qcae, QuantumSpec::new(3, 2, family, true));
            spec.validate().unwrap();
            assert_eq!(spec.encoder_width(), family.slot_count(3, 2));
        }
    }

    #[test]
    fn mismatched_latent_is_rejected() {
        let mut spec = ModelSpec::mnist(ModelKind::Qcae, qspec(4, 2));
        spec.quantum.layers = 3;
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = ModelSpec::mnist(ModelKind::Qcae, qspec(4, 2));
        spec.quantum.layers = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn zero_image_zero_weights_is_deterministic() {
        let spec = ModelSpec::mnist(ModelKind::Qcae, qspec(4, 2));
        let mut m = Autoencoder::<f64>::init(spec, 1).unwrap();
        for p in m.params_mut() {
            p.data_mut().fill(0.0);
        }
        let x = Tensor::zeros(&[1, 28, 28]);
        let (a, trace) = m.forward(&x, 0).unwrap();
        assert!(trace.angles.iter().all(|&t| (t - std::f64::consts::PI).abs() < 1e-15));
        let (b, _) = m.forward(&x, 0).unwrap();
        assert_eq!(a, b);
        // zero decoder weights: every pixel is sigmoid(0)
        assert!(a.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn zero_gamma_means_zero_latent() {
        let spec = ModelSpec::mnist(ModelKind::Qcae, qspec(3, 2));
        let m = Autoencoder::<f64>::init(spec, 2).unwrap();
        let z = m.latent_expectations(&[0.0, 0.0, 0.7, 1.3], 0).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-14), "{z:?}");
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let spec = ModelSpec::mnist(ModelKind::Qcae, qspec(2, 1));
        let m = Autoencoder::<f64>::init(spec, 3).unwrap();
        let x = Tensor::filled(&[1, 28, 28], 0.3);
        let (_, trace) = m.forward(&x, 0).unwrap();
        let g = m.backward(&trace, &Tensor::zeros(&[1, 28, 28])).unwrap();
        assert!(g.quantum.iter().all(|&v| v == 0.0));
        for t in g.encoder.iter().chain(&g.decoder) {
            assert!(t.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn psr_off_blocks_quantum_and_encoder_gradients() {
        let mut q = qspec(2, 1);
        q.psr_enabled = false;
        let m = Autoencoder::<f64>::init(ModelSpec::mnist(ModelKind::Qcae, q), 4).unwrap();
        let x = Tensor::filled(&[1, 28, 28], 0.3);
        let (_, g) = m.loss_and_gradients(&x, &Tensor::zeros(&[1, 28, 28]), 0).unwrap();
        assert!(g.quantum.iter().all(|&v| v == 0.0));
        assert!(g.encoder.iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
        assert!(g.decoder.iter().any(|t| t.data().iter().any(|&v| v != 0.0)));
        assert_eq!(g.circuit_executions, 0);
    }

    #[test]
    fn batch_denoise_preserves_order() {
        let m = Autoencoder::<f64>::init(ModelSpec::mnist(ModelKind::Ccae, qspec(4, 1)), 5).unwrap();
        let imgs: Vec<_> = (0..3).map(|k| Tensor::filled(&[1, 28, 28], 0.2 * k as f64)).collect();
        let batch = m.denoise_batch(&imgs).unwrap();
        for (im, out) in imgs.iter().zip(&batch) {
            assert_eq!(&m.denoise(im).unwrap(), out);
            assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn weights_round_trip_through_file() {
        let spec = ModelSpec::mnist(ModelKind::Qcae, qspec(2, 1));
        let m = Autoencoder::<f64>::init(spec.clone(), 6).unwrap();
        let dir = std::env::temp_dir().join(format!("qcae-w-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.bin");
        m.save_weights(&path).unwrap();
        let back = Autoencoder::<f64>::from_weights(spec.clone(), &path).unwrap();
        assert_eq!(back.params(), m.params());
        assert!(matches!(
            Autoencoder::<f64>::from_weights(spec, &dir.join("missing.bin")),
            Err(Error::Usage(_))
        ));
        fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn train_rejects_bad_config() {
        let mut m = Autoencoder::<f64>::init(ModelSpec::mnist(ModelKind::Ccae, qspec(2, 1)), 0).unwrap();
        let set = DenoisingSet::new(vec![Tensor::zeros(&[1, 28, 28])], vec![Tensor::zeros(&[1, 28, 28])]).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train(&mut m, &cfg, &set, &set, "x", |_| {}).is_err());
        let empty = DenoisingSet::new(vec![], vec![]).unwrap();
        let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
        assert!(train(&mut m, &cfg, &empty, &set, "x", |_| {}).is_err());
    }
}
