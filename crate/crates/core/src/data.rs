//! MNIST IDX ingestion, class filtering, Gaussian corruption and PGM images.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{usage, Error, Result};
use crate::nn::Tensor;
use crate::scalar::Real;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Images as `[1, rows, cols]` tensors in `[0, 1]`, with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MnistSet<T> {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Tensor<T>>,
    pub labels: Vec<u8>,
}

impl<T> MnistSet<T> {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset: offset as u64, message: message.into() }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| parse_err(offset, "truncated header"))
}

/// Raw image bytes from an IDX3 buffer: `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(parse_err(0, format!("image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let need = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| parse_err(4, "declared dimensions overflow"))?;
    let payload = &bytes[16..];
    if payload.len() < need {
        return Err(parse_err(
            16 + payload.len(),
            format!("payload truncated: {need} pixel bytes declared, {} present", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(parse_err(16 + need, "trailing bytes after image payload"));
    }
    Ok((count, rows, cols, payload))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(parse_err(0, format!("label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(parse_err(
            8 + payload.len(),
            format!("payload truncated: {count} labels declared, {} present", payload.len()),
        ));
    }
    if payload.len() > count {
        return Err(parse_err(8 + count, "trailing bytes after label payload"));
    }
    Ok(payload)
}

/// Builds a set from IDX buffers, scaling bytes by 1/255.
pub fn decode_idx<T: Real>(image_bytes: &[u8], label_bytes: &[u8]) -> Result<MnistSet<T>> {
    let (count, rows, cols, pixels) = parse_idx_images(image_bytes)?;
    let labels = parse_idx_labels(label_bytes)?;
    if labels.len() != count {
        return Err(parse_err(4, format!("label count {} differs from image count {count}", labels.len())));
    }
    let scale = T::one() / T::lit(255.0);
    let size = rows * cols;
    let images = pixels
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| {
            let data = px.iter().map(|&b| T::lit(b as f64) * scale).collect();
            Tensor::new(vec![1, rows, cols], data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MnistSet { rows, cols, images, labels: labels.to_vec() })
}

pub fn load_idx<T: Real>(images_path: &Path, labels_path: &Path) -> Result<MnistSet<T>> {
    let img = fs::read(images_path)?;
    let lbl = fs::read(labels_path)?;
    decode_idx(&img, &lbl)
}

fn split_paths(dir: &Path, train: bool) -> (std::path::PathBuf, std::path::PathBuf) {
    let (i, l) = if train { (TRAIN_IMAGES, TRAIN_LABELS) } else { (TEST_IMAGES, TEST_LABELS) };
    (dir.join(i), dir.join(l))
}

/// Loads the train or test split from a directory holding the four standard files.
pub fn load_split<T: Real>(dir: &Path, train: bool) -> Result<MnistSet<T>> {
    let (i, l) = split_paths(dir, train);
    load_idx(&i, &l)
}

/// Like [`load_split`] followed by [`filter_classes`], but only decodes the kept images.
pub fn load_split_filtered<T: Real>(dir: &Path, train: bool, classes: &[u8], limit: usize) -> Result<Filtered<T>> {
    if classes.is_empty() {
        return Err(usage("class filter is empty"));
    }
    let (ip, lp) = split_paths(dir, train);
    let img = fs::read(&ip).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", ip.display()))))?;
    let lbl = fs::read(&lp).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", lp.display()))))?;
    let (count, rows, cols, pixels) = parse_idx_images(&img)?;
    let labels = parse_idx_labels(&lbl)?;
    if labels.len() != count {
        return Err(parse_err(4, format!("label count {} differs from image count {count}", labels.len())));
    }
    let size = rows * cols;
    let scale = T::one() / T::lit(255.0);
    let mut images = Vec::new();
    let mut kept = Vec::new();
    for (k, &l) in labels.iter().enumerate() {
        if kept.len() == limit {
            break;
        }
        if classes.contains(&l) {
            let data = pixels[k * size..(k + 1) * size].iter().map(|&b| T::lit(b as f64) * scale).collect();
            images.push(Tensor::new(vec![1, rows, cols], data)?);
            kept.push(l);
        }
    }
    let short = kept.len() < limit;
    Ok(Filtered { set: MnistSet { rows, cols, images, labels: kept }, short })
}

fn to_byte<T: Real>(v: T) -> u8 {
    (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8
}

/// IDX3 image and IDX1 label buffers for `set`.
pub fn encode_idx<T: Real>(set: &MnistSet<T>) -> (Vec<u8>, Vec<u8>) {
    let mut img = Vec::with_capacity(16 + set.len() * set.rows * set.cols);
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(set.len() as u32).to_be_bytes());
    img.extend_from_slice(&(set.rows as u32).to_be_bytes());
    img.extend_from_slice(&(set.cols as u32).to_be_bytes());
    for im in &set.images {
        img.extend(im.data().iter().map(|&v| to_byte(v)));
    }
    let mut lbl = Vec::with_capacity(8 + set.len());
    lbl.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(set.labels.len() as u32).to_be_bytes());
    lbl.extend_from_slice(&set.labels);
    (img, lbl)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filtered<T> {
    pub set: MnistSet<T>,
    /// Fewer matches than the requested limit were found.
    pub short: bool,
}

/// First `limit` samples whose label is in `classes`, in file order.
pub fn filter_classes<T: Real>(set: &MnistSet<T>, classes: &[u8], limit: usize) -> Result<Filtered<T>> {
    if classes.is_empty() {
        return Err(usage("class filter is empty"));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (im, &l) in set.images.iter().zip(&set.labels) {
        if labels.len() == limit {
            break;
        }
        if classes.contains(&l) {
            images.push(im.clone());
            labels.push(l);
        }
    }
    let short = labels.len() < limit;
    Ok(Filtered { set: MnistSet { rows: set.rows, cols: set.cols, images, labels }, short })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// `clamp(x + σ·g, 0, 1)` with `g` standard normal from stream `(seed, stream)`.
pub fn add_gaussian_noise<T: Real>(image: &Tensor<T>, sigma: f64, seed: u64, stream: u64) -> Tensor<T> {
    if sigma == 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    image.map(|v| {
        let g: f64 = StandardNormal.sample(&mut rng);
        (v + T::lit(sigma * g)).max(T::zero()).min(T::one())
    })
}

/// Noised copies of `images`; image `i` uses stream `i`.
pub fn noisy_copies<T: Real>(images: &[Tensor<T>], spec: NoiseSpec) -> Result<Vec<Tensor<T>>> {
    if !spec.sigma.is_finite() || spec.sigma < 0.0 {
        return Err(crate::error::config(format!("noise sigma {} must be >= 0", spec.sigma)));
    }
    Ok(images
        .par_iter()
        .enumerate()
        .map(|(i, im)| add_gaussian_noise(im, spec.sigma, spec.seed, i as u64))
        .collect())
}

fn image_dims(shape: &[usize]) -> Result<(usize, usize)> {
    match *shape {
        [1, h, w] | [h, w] => Ok((h, w)),
        _ => Err(usage(format!("expected a [1, H, W] grayscale image, got {shape:?}"))),
    }
}

/// Binary PGM (P5, maxval 255) bytes for a `[1, H, W]` image in `[0, 1]`.
pub fn encode_pgm<T: Real>(image: &Tensor<T>) -> Result<Vec<u8>> {
    let (h, w) = image_dims(image.shape())?;
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.data().iter().map(|&v| to_byte(v)));
    Ok(out)
}

pub fn export_image<T: Real>(image: &Tensor<T>, path: &Path) -> Result<()> {
    let bytes = encode_pgm(image)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Parses a binary PGM with maxval ≤ 255 into a `[1, H, W]` tensor.
pub fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<Tensor<T>> {
    let mut pos = 0usize;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(pos, "truncated PGM header"));
        }
        fields.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
    }
    if fields[0].1 != "P5" {
        return Err(parse_err(0, format!("unsupported PGM magic {:?}", fields[0].1)));
    }
    let num = |i: usize| -> Result<usize> {
        fields[i].1.parse().map_err(|_| parse_err(fields[i].0, format!("bad number {:?}", fields[i].1)))
    };
    let (w, h, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(fields[3].0, format!("maxval {maxval} unsupported")));
    }
    // single whitespace byte separates header and raster
    pos += 1;
    let raster = bytes.get(pos..pos + w * h).ok_or_else(|| parse_err(bytes.len(), "truncated PGM raster"))?;
    let scale = 1.0 / maxval as f64;
    Tensor::new(vec![1, h, w], raster.iter().map(|&b| T::lit(b as f64 * scale)).collect())
}

pub fn import_image<T: Real>(path: &Path) -> Result<Tensor<T>> {
    decode_pgm(&fs::read(path)?)
}

/// Side-by-side panel of equally sized images separated by `gap` columns of mid-gray.
pub fn montage<T: Real>(images: &[&Tensor<T>], gap: usize) -> Result<Tensor<T>> {
    let first = images.first().ok_or_else(|| usage("montage needs at least one image"))?;
    let (h, w) = image_dims(first.shape())?;
    for im in images {
        if image_dims(im.shape())? != (h, w) {
            return Err(usage("montage images must share a size"));
        }
    }
    let total_w = images.len() * w + (images.len() - 1) * gap;
    let mut data = vec![T::lit(0.5); h * total_w];
    for (k, im) in images.iter().enumerate() {
        let x0 = k * (w + gap);
        for y in 0..h {
            data[y * total_w + x0..y * total_w + x0 + w].copy_from_slice(&im.data()[y * w..(y + 1) * w]);
        }
    }
    Tensor::new(vec![1, h, total_w], data)
}
