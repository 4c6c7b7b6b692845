//! `qcae`: train, denoise, evaluate and sweep convolutional autoencoders with a
//! classical or quantum-circuit latent.

mod commands;
mod config;
mod fetch;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qcae_core::{CircuitFamily, Error};

use commands::Axes;
use config::{parse_switch, Overrides};

#[derive(Parser)]
#[command(name = "qcae", version, about = "Quantum-latent convolutional autoencoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes config, manifest, metrics CSV and weights.
    Train {
        #[command(flatten)]
        cfg: Overrides,
    },
    /// Denoise test images (or PGM inputs) with trained weights.
    Denoise {
        #[command(flatten)]
        cfg: Overrides,
        #[arg(long)]
        weights: PathBuf,
        /// Number of test images when no --input is given
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Clean PGM images to corrupt and denoise
        #[arg(long)]
        input: Vec<PathBuf>,
    },
    /// Noisy-input SSIM across noise levels, optionally with a trained model.
    Eval {
        #[command(flatten)]
        cfg: Overrides,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
        sigma_values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Download the MNIST IDX files into the data directory.
    Fetch {
        #[command(flatten)]
        cfg: Overrides,
        /// Base URL serving `<file>.gz`
        #[arg(long, default_value = fetch::DEFAULT_MIRROR)]
        mirror: String,
    },
    /// Train one model per grid point and summarize final scores.
    Sweep {
        #[command(flatten)]
        cfg: Overrides,
        #[arg(long, value_delimiter = ',')]
        p_values: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        sigma_values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        families: Vec<CircuitFamily>,
        #[arg(long, value_delimiter = ',', value_parser = parse_switch)]
        psr_values: Vec<bool>,
    },
}

fn or_default<T: Clone>(values: Vec<T>, fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values
    }
}

fn run(cli: Cli) -> qcae_core::Result<PathBuf> {
    match cli.command {
        Command::Train { cfg } => commands::cmd_train(&cfg.resolve()?),
        Command::Denoise { cfg, weights, count, input } => {
            if count == 0 && input.is_empty() {
                return Err(Error::Usage("--count must be >= 1".into()));
            }
            commands::cmd_denoise(&cfg.resolve()?, &weights, count, &input)
        }
        Command::Eval { cfg, sigma_values, count, weights } => {
            if count == 0 {
                return Err(Error::Usage("--count must be >= 1".into()));
            }
            commands::cmd_eval(&cfg.resolve()?, &sigma_values, count, weights.as_deref())
        }
        Command::Fetch { cfg, mirror } => {
            let cfg = cfg.resolve()?;
            for name in fetch::fetch_files(&mirror, &cfg.data_dir, &fetch::MNIST_FILES)? {
                eprintln!("fetched {name}");
            }
            Ok(cfg.data_dir)
        }
        Command::Sweep { cfg, p_values, sigma_values, families, psr_values } => {
            let base = cfg.resolve()?;
            let axes = Axes {
                p: or_default(p_values, base.p),
                sigma: or_default(sigma_values, base.sigma),
                family: or_default(families, base.family),
                psr: or_default(psr_values, base.psr),
            };
            commands::cmd_sweep(&base, &axes)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Usage(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
