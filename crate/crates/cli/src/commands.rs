use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qcae_core::data::{add_gaussian_noise, export_image, import_image, load_split_filtered, montage, noisy_copies};
use qcae_core::metrics::{records_to_csv, write_csv};
use qcae_core::{
    mean_ssim, train, Autoencoder64, CircuitFamily, DenoisingSet, Error, NoiseSpec, Result, RunRecord,
    SsimConfig, Tensor64,
};
use serde::Serialize;

use crate::config::{short_hash, ExperimentConfig};

/// Validation and panel images draw noise from streams above the training ones.
const VAL_STREAM: u64 = 1 << 32;
const PANEL_STREAM: u64 = 2 << 32;

pub struct Clean {
    pub train: Vec<Tensor64>,
    pub val: Vec<Tensor64>,
}

pub fn load_clean(cfg: &ExperimentConfig, train_split: bool) -> Result<Clean> {
    let train = if train_split {
        let f = load_split_filtered(&cfg.data_dir, true, &cfg.classes, cfg.limit)?;
        if f.short {
            eprintln!("warning: only {} training samples match classes {:?}", f.set.len(), cfg.classes);
        }
        f.set.images
    } else {
        Vec::new()
    };
    let f = load_split_filtered(&cfg.data_dir, false, &cfg.classes, cfg.val_limit)?;
    if f.short {
        eprintln!("warning: only {} validation samples match classes {:?}", f.set.len(), cfg.classes);
    }
    Ok(Clean { train, val: f.set.images })
}

fn noisy_val(images: &[Tensor64], sigma: f64, seed: u64) -> Vec<Tensor64> {
    images
        .iter()
        .enumerate()
        .map(|(i, im)| add_gaussian_noise(im, sigma, seed, VAL_STREAM + i as u64))
        .collect()
}

pub struct Outcome {
    pub model: Autoencoder64,
    pub records: Vec<RunRecord>,
    pub noisy_val_ssim: f64,
}

pub fn run_training(cfg: &ExperimentConfig, clean: &Clean) -> Result<Outcome> {
    let id = cfg.config_id();
    let train_noisy = noisy_copies(&clean.train, NoiseSpec { sigma: cfg.sigma, seed: cfg.seed })?;
    let val_noisy = noisy_val(&clean.val, cfg.sigma, cfg.seed);
    let noisy_val_ssim = mean_ssim(&val_noisy, &clean.val, &SsimConfig::default())?;
    let train_set = DenoisingSet::new(train_noisy, clean.train.clone())?;
    let val_set = DenoisingSet::new(val_noisy, clean.val.clone())?;
    let mut model = Autoencoder64::init(cfg.model_spec(), cfg.seed)?;
    let records = train(&mut model, &cfg.train_config(), &train_set, &val_set, &id, |r| {
        eprintln!(
            "[{id}] epoch {:>3}/{}  loss {:.6}  val_ssim {:.4}",
            r.epoch, cfg.epochs, r.train_loss, r.val_ssim
        )
    })?;
    Ok(Outcome { model, records, noisy_val_ssim })
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_id: &'a str,
    version: &'a str,
    parameters: usize,
    train_samples: usize,
    val_samples: usize,
    epochs_completed: usize,
    final_train_loss: f64,
    final_val_ssim: f64,
    noisy_val_ssim: f64,
}

fn manifest_text(clean: &Clean, out: &Outcome) -> String {
    let last = out.records.last().expect("at least one epoch");
    let m = Manifest {
        config_id: &last.config_id,
        version: env!("CARGO_PKG_VERSION"),
        parameters: out.model.parameter_count(),
        train_samples: clean.train.len(),
        val_samples: clean.val.len(),
        epochs_completed: out.records.len(),
        final_train_loss: last.train_loss,
        final_val_ssim: last.val_ssim,
        noisy_val_ssim: out.noisy_val_ssim,
    };
    toml::to_string(&m).expect("manifest serializes")
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let clean = load_clean(cfg, true)?;
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let out = run_training(cfg, &clean)?;
    write_csv(&out.records, &dir.join("metrics.csv"))?;
    out.model.save_weights(&dir.join("weights.bin"))?;
    fs::write(dir.join("manifest.toml"), manifest_text(&clean, &out))?;
    Ok(dir)
}

/// Writes one `[clean | noisy | denoised]` montage per image.
pub fn cmd_denoise(cfg: &ExperimentConfig, weights: &Path, count: usize, inputs: &[PathBuf]) -> Result<PathBuf> {
    let model = Autoencoder64::from_weights(cfg.model_spec(), weights)?;
    let clean: Vec<Tensor64> = if inputs.is_empty() {
        let mut c = cfg.clone();
        c.val_limit = count;
        load_clean(&c, false)?.val
    } else {
        inputs.iter().map(|p| import_image(p)).collect::<Result<_>>()?
    };
    let noisy: Vec<Tensor64> = clean
        .iter()
        .enumerate()
        .map(|(i, im)| add_gaussian_noise(im, cfg.sigma, cfg.seed, PANEL_STREAM + i as u64))
        .collect();
    let denoised = model.denoise_batch(&noisy)?;
    let dir = cfg.run_dir().join("denoise");
    fs::create_dir_all(&dir)?;
    let mut summary = String::from("image,noisy_ssim,denoised_ssim\n");
    let ssim_cfg = SsimConfig::default();
    for (i, ((c, n), d)) in clean.iter().zip(&noisy).zip(&denoised).enumerate() {
        let panel = montage(&[c, n, d], 2)?;
        export_image(&panel, &dir.join(format!("montage_{i:04}.pgm")))?;
        let _ = writeln!(
            summary,
            "{i},{:.6},{:.6}",
            qcae_core::ssim(n, c, &ssim_cfg)?,
            qcae_core::ssim(d, c, &ssim_cfg)?
        );
    }
    fs::write(dir.join("summary.csv"), summary)?;
    Ok(dir)
}

/// Mean SSIM of noisy (and optionally denoised) test images against the clean ones.
pub fn cmd_eval(cfg: &ExperimentConfig, sigmas: &[f64], count: usize, weights: Option<&Path>) -> Result<PathBuf> {
    for &s in sigmas {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("sigma-values: {s} must be finite and >= 0")));
        }
    }
    let model = weights.map(|w| Autoencoder64::from_weights(cfg.model_spec(), w)).transpose()?;
    let mut c = cfg.clone();
    c.val_limit = count;
    let clean = load_clean(&c, false)?.val;
    let ssim_cfg = SsimConfig::default();
    let mut csv = String::from(if model.is_some() { "sigma,images,noisy_ssim,denoised_ssim\n" } else { "sigma,images,noisy_ssim\n" });
    for &s in sigmas {
        let noisy = noisy_val(&clean, s, cfg.seed);
        let base = mean_ssim(&noisy, &clean, &ssim_cfg)?;
        let _ = write!(csv, "{s},{},{base:.6}", clean.len());
        if let Some(m) = &model {
            let _ = write!(csv, ",{:.6}", mean_ssim(&m.denoise_batch(&noisy)?, &clean, &ssim_cfg)?);
        }
        csv.push('\n');
    }
    let tag: String = sigmas.iter().map(|s| format!("{s},")).collect();
    let dir = cfg.output_dir.join(format!("eval-{}", short_hash(format!("{}|{tag}|{count}", cfg.config_id()).as_bytes())));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("eval.csv"), &csv)?;
    print!("{csv}");
    Ok(dir)
}

pub struct Axes {
    pub p: Vec<usize>,
    pub sigma: Vec<f64>,
    pub family: Vec<CircuitFamily>,
    pub psr: Vec<bool>,
}

pub const SWEEP_HEADER: &str =
    "config_id,family,p,psr,sigma,seed,status,final_train_loss,final_val_ssim,noisy_val_ssim";

/// Cartesian grid in family, p, psr, sigma order; point `k` trains with seed `base + k`.
pub fn grid(base: &ExperimentConfig, axes: &Axes) -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for &family in &axes.family {
        for &p in &axes.p {
            for &psr in &axes.psr {
                for &sigma in &axes.sigma {
                    let seed = base.seed.wrapping_add(out.len() as u64);
                    out.push(ExperimentConfig { family, p, psr, sigma, seed, ..base.clone() });
                }
            }
        }
    }
    out
}

pub fn cmd_sweep(base: &ExperimentConfig, axes: &Axes) -> Result<PathBuf> {
    let points = grid(base, axes);
    if points.is_empty() {
        return Err(Error::Config("sweep axes must be nonempty".into()));
    }
    let ids: String = points.iter().map(|c| c.config_id()).collect::<Vec<_>>().join(",");
    let dir = base.output_dir.join(format!("sweep-{}", short_hash(ids.as_bytes())));
    fs::create_dir_all(&dir)?;
    let clean = load_clean(base, true)?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    let mut failures = 0;
    for cfg in &points {
        let id = cfg.config_id();
        let head = format!("{id},{},{},{},{},{}", cfg.family, cfg.p, if cfg.psr { "on" } else { "off" }, cfg.sigma, cfg.seed);
        let result = cfg.validate().and_then(|_| run_training(cfg, &clean));
        match result {
            Ok(out) => {
                let last = out.records.last().expect("at least one epoch");
                let _ = writeln!(
                    csv,
                    "{head},ok,{:.6},{:.6},{:.6}",
                    last.train_loss, last.val_ssim, out.noisy_val_ssim
                );
                fs::write(dir.join(format!("{id}.csv")), records_to_csv(&out.records))?;
            }
            Err(e) => {
                failures += 1;
                eprintln!("[{id}] FAILED: {e}");
                let _ = writeln!(csv, "{head},FAILED,,,");
            }
        }
        fs::write(dir.join("sweep.csv"), &csv)?;
    }
    if failures > 0 {
        eprintln!("{failures} of {} sweep points failed", points.len());
    }
    Ok(dir)
}
