//! Datasets, loaders, standardization and data partitions.

mod idx;
mod partition;
mod split;
mod standardize;
mod synthetic;
mod tabular;

pub use idx::{load_idx_images, load_mnist_dir, write_idx_images, write_idx_labels};
pub use partition::{make_partition, Partition, PartitionPlan};
pub use split::{stratified_split, stratified_split_indices, stratified_subsample};
pub use standardize::{fit_standardizer, Standardizer};
pub use synthetic::{gaussian_blobs, BlobSpec};
pub use tabular::{load_tabular, LabelColumn};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub num_classes: usize,
    pub name: String,
    /// Rows `0..n` form the official training portion when the source ships
    /// a standard train/test split.
    pub standard_train_len: Option<usize>,
}

impl Dataset {
    /// Validated constructor: labels in range and every class present.
    pub fn new(name: impl Into<String>, x: Matrix, y: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ds = Self {
            x,
            y,
            num_classes,
            name: name.into(),
            standard_train_len: None,
        };
        ds.check_shape()?;
        let mut seen = vec![false; num_classes];
        for &l in &ds.y {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!("class {missing} has no examples")));
        }
        Ok(ds)
    }

    fn check_shape(&self) -> Result<()> {
        if self.x.rows() != self.y.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                self.x.rows(),
                self.y.len()
            )));
        }
        if let Some(&bad) = self.y.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::Data(format!("label {bad} outside [0, {})", self.num_classes)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.x.cols()
    }

    /// Rows at `idx`, in that order. Subsets may lack some classes.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            num_classes: self.num_classes,
            name: self.name.clone(),
            standard_train_len: None,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Replaces the features, keeping labels.
    pub fn with_features(&self, x: Matrix) -> Result<Dataset> {
        let ds = Dataset {
            x,
            y: self.y.clone(),
            num_classes: self.num_classes,
            name: self.name.clone(),
            standard_train_len: self.standard_train_len,
        };
        ds.check_shape()?;
        Ok(ds)
    }
}
