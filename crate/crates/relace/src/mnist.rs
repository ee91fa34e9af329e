//! IDX container parsing for digit image/label files: big-endian magic,
//! dimensions, then raw payload bytes.

use std::fs;
use std::path::{Path, PathBuf};

use relace_core::snn_mnist::{MnistDataset, IMAGE_PIXELS, IMAGE_SIDE};
use thiserror::Error;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Error, Debug)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic 0x{got:08x} at offset 0, expected 0x{want:08x}")]
    BadMagic { path: PathBuf, got: u32, want: u32 },
    #[error("{path}: truncated at offset {offset}: need {needed} bytes, file has {got}")]
    Truncated {
        path: PathBuf,
        offset: usize,
        needed: usize,
        got: usize,
    },
    #[error("{path}: image dimensions {rows}x{cols}, expected {side}x{side}", side = IMAGE_SIDE)]
    BadDimensions { path: PathBuf, rows: u32, cols: u32 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
}

fn read_be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, IdxError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            offset,
            needed: end,
            got: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

fn load_images(path: &Path) -> Result<Vec<[u8; IMAGE_PIXELS]>, IdxError> {
    let bytes = fs::read(path).map_err(|e| IdxError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let magic = read_be_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            path: path.to_path_buf(),
            got: magic,
            want: IMAGES_MAGIC,
        });
    }
    let count = read_be_u32(&bytes, 4, path)? as usize;
    let rows = read_be_u32(&bytes, 8, path)?;
    let cols = read_be_u32(&bytes, 12, path)?;
    if rows as usize != IMAGE_SIDE || cols as usize != IMAGE_SIDE {
        return Err(IdxError::BadDimensions {
            path: path.to_path_buf(),
            rows,
            cols,
        });
    }
    let needed = 16 + count * IMAGE_PIXELS;
    if bytes.len() < needed {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len(),
            needed,
            got: bytes.len(),
        });
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * IMAGE_PIXELS;
        let mut img = [0u8; IMAGE_PIXELS];
        img.copy_from_slice(&bytes[start..start + IMAGE_PIXELS]);
        images.push(img);
    }
    Ok(images)
}

fn load_labels(path: &Path) -> Result<Vec<u8>, IdxError> {
    let bytes = fs::read(path).map_err(|e| IdxError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let magic = read_be_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            path: path.to_path_buf(),
            got: magic,
            want: LABELS_MAGIC,
        });
    }
    let count = read_be_u32(&bytes, 4, path)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(IdxError::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len(),
            needed,
            got: bytes.len(),
        });
    }
    Ok(bytes[8..8 + count].to_vec())
}

/// Load a dataset from one images file and one labels file.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<MnistDataset, IdxError> {
    let images = load_images(images_path)?;
    let labels = load_labels(labels_path)?;
    if images.len() != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(MnistDataset { images, labels })
}

/// Load the conventional `train-` or `t10k-` pair from a directory.
pub fn load_mnist_dir(dir: &Path, train: bool) -> Result<MnistDataset, IdxError> {
    let prefix = if train { "train" } else { "t10k" };
    load_mnist(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Write images in IDX layout.
pub fn write_idx_images(path: &Path, images: &[[u8; IMAGE_PIXELS]]) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(16 + images.len() * IMAGE_PIXELS);
    bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    bytes.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for img in images {
        bytes.extend_from_slice(img);
    }
    fs::write(path, bytes)
}

/// Write labels in IDX layout.
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    fs::write(path, bytes)
}

/// Write a dataset as the conventional directory pair.
pub fn write_mnist_dir(dir: &Path, data: &MnistDataset, train: bool) -> std::io::Result<()> {
    let prefix = if train { "train" } else { "t10k" };
    write_idx_images(&dir.join(format!("{prefix}-images-idx3-ubyte")), &data.images)?;
    write_idx_labels(&dir.join(format!("{prefix}-labels-idx1-ubyte")), &data.labels)
}
