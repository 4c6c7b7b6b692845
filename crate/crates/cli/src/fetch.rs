//! Downloads the gzipped MNIST IDX files from a mirror.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use qcae_core::data::{TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS};
use qcae_core::{Error, Result};

/// Uncompressed byte lengths of the official files.
pub const MNIST_FILES: [(&str, u64); 4] = [
    (TRAIN_IMAGES, 47_040_016),
    (TRAIN_LABELS, 60_008),
    (TEST_IMAGES, 7_840_016),
    (TEST_LABELS, 10_008),
];

pub const DEFAULT_MIRROR: &str = "https://ossci-datasets.s3.amazonaws.com/mnist";

fn network(url: &str, e: impl std::fmt::Display) -> Error {
    Error::Io(io::Error::other(format!("{url}: {e}")))
}

/// Fetches `<mirror>/<name>.gz` for each entry, checking the decompressed length.
/// Files already present with the right length are left alone.
pub fn fetch_files(mirror: &str, dir: &Path, files: &[(&str, u64)]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut fetched = Vec::new();
    for &(name, expected) in files {
        let target = dir.join(name);
        if fs::metadata(&target).map(|m| m.len() == expected).unwrap_or(false) {
            continue;
        }
        let url = format!("{}/{name}.gz", mirror.trim_end_matches('/'));
        let response = ureq::get(&url).call().map_err(|e| network(&url, e))?;
        let mut bytes = Vec::with_capacity(expected as usize);
        GzDecoder::new(response.into_body().into_reader())
            .take(expected + 1)
            .read_to_end(&mut bytes)
            .map_err(|e| network(&url, e))?;
        if bytes.len() as u64 != expected {
            return Err(Error::Parse {
                offset: bytes.len() as u64,
                message: format!("{url}: decompressed to {} bytes, expected {expected}", bytes.len()),
            });
        }
        let partial = dir.join(format!("{name}.part"));
        fs::write(&partial, &bytes)?;
        fs::rename(&partial, &target)?;
        fetched.push(name.to_string());
    }
    Ok(fetched)
}
