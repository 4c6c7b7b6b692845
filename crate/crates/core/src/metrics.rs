//! Structural similarity and run-record CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{usage, Result};
use crate::nn::Tensor;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SsimWindow {
    Uniform { size: usize },
    Gaussian { size: usize, sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimConfig {
    pub window: SsimWindow,
    pub dynamic_range: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        SsimConfig {
            window: SsimWindow::Gaussian { size: 11, sigma: 1.5 },
            dynamic_range: 1.0,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

impl SsimConfig {
    pub fn uniform(size: usize) -> Self {
        SsimConfig { window: SsimWindow::Uniform { size }, ..Self::default() }
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized square window, row-major.
    pub fn weights(&self) -> (usize, Vec<f64>) {
        match self.window {
            SsimWindow::Uniform { size } => (size, vec![1.0 / (size * size) as f64; size * size]),
            SsimWindow::Gaussian { size, sigma } => {
                let c = (size as f64 - 1.0) / 2.0;
                let g: Vec<f64> = (0..size)
                    .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
                    .collect();
                let mut w: Vec<f64> = (0..size * size).map(|k| g[k / size] * g[k % size]).collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= total);
                (size, w)
            }
        }
    }
}

/// Mean SSIM over all window positions fully inside the image (per channel, then averaged).
///
/// Windows larger than the image shrink to the image size.
pub fn ssim<T: Real>(a: &Tensor<T>, b: &Tensor<T>, cfg: &SsimConfig) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(usage(format!("ssim shapes differ: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let (c, h, w) = match *a.shape() {
        [c, h, w] => (c, h, w),
        [h, w] => (1, h, w),
        ref s => return Err(usage(format!("ssim expects [C, H, W] or [H, W], got {s:?}"))),
    };
    if h == 0 || w == 0 {
        return Err(usage("ssim on an empty image"));
    }
    let (requested, _) = cfg.weights();
    let cfg = if requested > h.min(w) {
        let size = h.min(w);
        match cfg.window {
            SsimWindow::Uniform { .. } => SsimConfig { window: SsimWindow::Uniform { size }, ..*cfg },
            SsimWindow::Gaussian { sigma, .. } => SsimConfig { window: SsimWindow::Gaussian { size, sigma }, ..*cfg },
        }
    } else {
        *cfg
    };
    let (k, weights) = cfg.weights();
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let (xa, xb) = (a.data(), b.data());
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..c {
        let base = ch * h * w;
        for y0 in 0..=h - k {
            for x0 in 0..=w - k {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in 0..k {
                    for dx in 0..k {
                        let wt = weights[dy * k + dx];
                        let i = base + (y0 + dy) * w + x0 + dx;
                        let (va, vb) = (xa[i].as_f64(), xb[i].as_f64());
                        ma += wt * va;
                        mb += wt * vb;
                        saa += wt * va * va;
                        sbb += wt * vb * vb;
                        sab += wt * va * vb;
                    }
                }
                let var_a = saa - ma * ma;
                let var_b = sbb - mb * mb;
                let cov = sab - ma * mb;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

/// Mean per-pair SSIM.
pub fn mean_ssim<T: Real>(a: &[Tensor<T>], b: &[Tensor<T>], cfg: &SsimConfig) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(usage(format!("mean_ssim needs equal nonempty sets, got {} and {}", a.len(), b.len())));
    }
    let scores = a
        .par_iter()
        .zip(b)
        .map(|(x, y)| ssim(x, y, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_ssim: f64,
    pub config_id: String,
}

pub const CSV_HEADER: &str = "config_id,epoch,train_loss,val_ssim";

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{:.6},{:.6}", r.config_id, r.epoch, r.train_loss, r.val_ssim);
    }
    out
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(usage("no records to write"));
    }
    fs::write(path, records_to_csv(records))?;
    Ok(())
}
