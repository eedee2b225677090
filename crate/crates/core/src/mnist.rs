//! MNIST IDX file reader.
//!
//! Images use magic `0x00000803` followed by big-endian count, rows and
//! columns; labels use magic `0x00000801` followed by a big-endian count.
//! Pixels are unsigned bytes scaled by `1/255`.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::trainer::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Raw contents of an image IDX file.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn check_header(path: &Path, bytes: &[u8], expected: u32, header_len: usize) -> Result<()> {
    if bytes.len() < header_len {
        return Err(Error::Idx {
            path: path.to_path_buf(),
            message: format!("truncated header ({} bytes)", bytes.len()),
        });
    }
    let magic = be_u32(bytes, 0);
    if magic != expected {
        return Err(Error::IdxMagic { path: path.to_path_buf(), expected, found: magic });
    }
    Ok(())
}

pub fn parse_images(path: &Path, bytes: &[u8]) -> Result<IdxImages> {
    check_header(path, bytes, IMAGES_MAGIC, 16)?;
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let expected = count * rows * cols;
    let body = &bytes[16..];
    if body.len() != expected {
        return Err(Error::Idx {
            path: path.to_path_buf(),
            message: format!("header announces {count}×{rows}×{cols} = {expected} pixels, body has {}", body.len()),
        });
    }
    Ok(IdxImages { count, rows, cols, pixels: body.to_vec() })
}

pub fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>> {
    check_header(path, bytes, LABELS_MAGIC, 8)?;
    let count = be_u32(bytes, 4) as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Idx {
            path: path.to_path_buf(),
            message: format!("header announces {count} labels, body has {}", body.len()),
        });
    }
    Ok(body.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image/label file pair into a dataset with pixels in `[0,1]`.
pub fn load_pair(images: &Path, labels: &Path) -> Result<Dataset> {
    let img = parse_images(images, &read(images)?)?;
    let lab = parse_labels(labels, &read(labels)?)?;
    if img.count != lab.len() {
        return Err(Error::Idx {
            path: labels.to_path_buf(),
            message: format!("{} labels for {} images", lab.len(), img.count),
        });
    }
    let pixels = img.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let labels = lab.iter().map(|&l| l as usize).collect();
    Dataset::new(img.rows * img.cols, 10, pixels, labels)
}

/// The standard MNIST file set inside one directory.
#[derive(Debug, Clone)]
pub struct MnistDir {
    root: PathBuf,
}

impl MnistDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn train(&self) -> Result<Dataset> {
        load_pair(&self.root.join(TRAIN_IMAGES), &self.root.join(TRAIN_LABELS))
    }

    pub fn test(&self) -> Result<Dataset> {
        load_pair(&self.root.join(TEST_IMAGES), &self.root.join(TEST_LABELS))
    }
}
