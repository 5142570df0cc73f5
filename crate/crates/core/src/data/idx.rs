//! Reader and writer for the big-endian IDX image/label format used by MNIST.

use std::fs;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

fn read_images(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let what = path.display().to_string();
    let magic = be_u32(&bytes, 0, &what)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "{what}: image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let n = be_u32(&bytes, 4, &what)? as usize;
    let rows = be_u32(&bytes, 8, &what)? as usize;
    let cols = be_u32(&bytes, 12, &what)? as usize;
    let d = rows * cols;
    let body = &bytes[16..];
    if body.len() != n * d {
        return Err(Error::Format(format!(
            "{what}: {} pixel bytes for {n} images of {rows}x{cols}",
            body.len()
        )));
    }
    Ok((n, d, body.to_vec()))
}

fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let what = path.display().to_string();
    let magic = be_u32(&bytes, 0, &what)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "{what}: label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let n = be_u32(&bytes, 4, &what)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(Error::Format(format!(
            "{what}: {} label bytes for {n} labels",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

/// Loads an image file and its label file. Pixels become reals in `[0, 255]`.
pub fn load_idx_images(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (n, d, pixels) = read_images(images_path.as_ref())?;
    let labels = read_labels(labels_path.as_ref())?;
    if labels.len() != n {
        return Err(Error::Format(format!("{n} images but {} labels", labels.len())));
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let x = Matrix::from_vec(n, d, pixels.into_iter().map(f64::from).collect())?;
    Dataset::new(
        images_path
            .as_ref()
            .file_stem()
            .map_or_else(|| "idx".to_owned(), |s| s.to_string_lossy().into_owned()),
        x,
        labels.into_iter().map(usize::from).collect(),
        num_classes,
    )
}

/// Loads the four standard MNIST files from `dir` into one dataset whose
/// first 60000 rows are the official training portion.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let train = load_idx_images(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    let test = load_idx_images(dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"))?;
    if train.num_features() != test.num_features() {
        return Err(Error::Format("train and test images differ in size".into()));
    }
    let n_train = train.len();
    let mut data = train.x.into_data();
    data.extend_from_slice(test.x.data());
    let mut y = train.y;
    y.extend_from_slice(&test.y);
    let n = y.len();
    let k = train.num_classes.max(test.num_classes);
    let mut ds = Dataset::new("mnist", Matrix::from_vec(n, test.x.cols(), data)?, y, k)?;
    ds.standard_train_len = Some(n_train);
    Ok(ds)
}

pub fn write_idx_images(path: impl AsRef<Path>, rows: usize, cols: usize, pixels: &[u8]) -> Result<()> {
    let n = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out)?;
    Ok(())
}
