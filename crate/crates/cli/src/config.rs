//! Flat experiment configuration: defaults, TOML file, environment, flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use qcae_core::{CircuitFamily, Error, ModelKind, ModelSpec, NoiseChannel, QuantumSpec, Result, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Dataset root override.
pub const DATA_DIR_ENV: &str = "QCAE_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory with the four MNIST IDX files.
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub model: ModelKind,
    pub qubits: usize,
    pub p: usize,
    pub family: CircuitFamily,
    pub psr: bool,
    /// Std of the additive Gaussian corruption.
    pub sigma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Training samples after class filtering.
    pub limit: usize,
    /// Validation samples from the test split.
    pub val_limit: usize,
    pub classes: Vec<u8>,
    pub depolarizing: f64,
    pub readout_flip: f64,
    /// 0 means exact expectations.
    pub shots: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_dir: PathBuf::from("data/mnist"),
            output_dir: PathBuf::from("runs"),
            model: ModelKind::Qcae,
            qubits: 4,
            p: 2,
            family: CircuitFamily::Ours,
            psr: true,
            sigma: 0.5,
            epochs: 50,
            batch_size: 8,
            learning_rate: 3e-3,
            seed: 0,
            limit: 2000,
            val_limit: 200,
            classes: vec![0, 1],
            depolarizing: 0.0,
            readout_flip: 0.0,
            shots: 0,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=qcae_core::MAX_QUBITS).contains(&self.qubits) {
            return Err(bad("qubits", format!("must be in 1..={}, got {}", qcae_core::MAX_QUBITS, self.qubits)));
        }
        if self.p < 1 {
            return Err(bad("p", "must be >= 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(bad("sigma", format!("must be finite and >= 0, got {}", self.sigma)));
        }
        if self.epochs < 1 {
            return Err(bad("epochs", "must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(bad("batch_size", "must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(bad("learning_rate", "must be positive"));
        }
        if self.limit < 1 {
            return Err(bad("limit", "must be >= 1"));
        }
        if self.val_limit < 1 {
            return Err(bad("val_limit", "must be >= 1"));
        }
        if self.classes.is_empty() || self.classes.iter().any(|&c| c > 9) {
            return Err(bad("classes", "must be a nonempty list of digits 0-9"));
        }
        if !(0.0..=1.0).contains(&self.depolarizing) {
            return Err(bad("depolarizing", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.readout_flip) {
            return Err(bad("readout_flip", "must be in [0, 1]"));
        }
        Ok(())
    }

    /// Short hash of everything that affects results (paths excluded).
    pub fn config_id(&self) -> String {
        let mut c = self.clone();
        c.data_dir = PathBuf::new();
        c.output_dir = PathBuf::new();
        short_hash(c.to_toml().as_bytes())
    }

    pub fn model_spec(&self) -> ModelSpec {
        let quantum = QuantumSpec {
            n_qubits: self.qubits,
            layers: self.p,
            family: self.family,
            psr_enabled: self.psr,
            noise: NoiseChannel { depolarizing_prob: self.depolarizing, readout_flip_prob: self.readout_flip },
            noise_seed: self.seed,
            shots: (self.shots > 0).then_some(self.shots),
        };
        ModelSpec::mnist(self.model, quantum)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            sigma: self.sigma,
            learning_rate: self.learning_rate,
            sample_limit: self.limit,
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.config_id())
    }
}

pub fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub fn parse_switch(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on/off, got {s:?}")),
    }
}

/// Flags mirroring the config keys. Anything given here wins.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// ccae or qcae
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// ours, a, b or c
    #[arg(long)]
    pub family: Option<CircuitFamily>,
    /// on or off
    #[arg(long, value_parser = parse_switch)]
    pub psr: Option<bool>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub val_limit: Option<usize>,
    /// Comma-separated digit classes
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<u8>>,
    #[arg(long)]
    pub depolarizing: Option<f64>,
    #[arg(long)]
    pub readout_flip: Option<f64>,
    #[arg(long)]
    pub shots: Option<usize>,
}

impl Overrides {
    /// Defaults, then the config file, then the environment, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
            c.data_dir = PathBuf::from(dir);
        }
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        take!(
            data_dir, output_dir, model, qubits, p, family, psr, sigma, epochs, batch_size, learning_rate, seed,
            limit, val_limit, classes, depolarizing, readout_flip, shots
        );
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig { p: 3, family: CircuitFamily::B, psr: false, ..Default::default() };
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.config_id(), c.config_id());
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = ExperimentConfig::from_toml("qubits = 3\nlayers = 2\n").unwrap_err().to_string();
        assert!(err.contains("layers"), "{err}");
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml("p = 5\nfamily = \"c\"\n").unwrap();
        assert_eq!(c.p, 5);
        assert_eq!(c.family, CircuitFamily::C);
        assert_eq!(c.qubits, ExperimentConfig::default().qubits);
    }

    #[test]
    fn validation_names_the_key() {
        let c = ExperimentConfig { p: 0, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("p:"));
        let c = ExperimentConfig { sigma: -1.0, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("sigma"));
    }

    #[test]
    fn id_ignores_paths_but_not_settings() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output_dir: "elsewhere".into(), ..a.clone() };
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_eq!(a.config_id(), b.config_id());
        assert_ne!(a.config_id(), c.config_id());
        assert_eq!(a.config_id().len(), 12);
    }

    #[test]
    fn switches() {
        assert_eq!(parse_switch("ON"), Ok(true));
        assert_eq!(parse_switch("off"), Ok(false));
        assert!(parse_switch("maybe").is_err());
    }
}
