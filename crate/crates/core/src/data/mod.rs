//! Labeled datasets: IDX and CIFAR-10 binary ingestion, seeded synthetic
//! clusters, label randomization, augmentation and batching.
//!
//! Every dataset stores inputs scaled to `[-1, 1]`, the same range as the
//! tanh-terminated generators.

mod augment;
mod batch;
mod cifar;
mod idx;
mod noise;
mod synth;

pub use augment::{augment, AugmentationPolicy};
pub use batch::{batches, epoch_permutation, Batch};
pub use cifar::{load_cifar10_binary, CIFAR_RECORD_LEN};
pub use idx::{load_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use noise::randomize_labels;
pub use synth::{cluster_centers, synth_clusters, SynthSpec};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("truncated header: need {needed} bytes at offset {offset}, file has {len}")]
    TruncatedHeader { offset: usize, needed: usize, len: usize },
    #[error("truncated data: need {needed} bytes at offset {offset}, file has {len}")]
    TruncatedData { offset: usize, needed: usize, len: usize },
    #[error("bad magic 0x{found:08x} at offset 0 (expected 0x{expected:08x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("empty dataset")]
    Empty,
    #[error("file length {len} is not a multiple of the {record}-byte record size")]
    RecordLength { len: usize, record: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelProvenance {
    True,
    Randomized { noise_level: f64, seed: u64 },
}

/// Inputs of shape `[n, ...]` with one class label per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    inputs: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    provenance: LabelProvenance,
}

impl LabeledDataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let n = *inputs.shape().first().ok_or(DataError::Empty)?;
        if labels.is_empty() {
            return Err(DataError::Empty);
        }
        if n != labels.len() || inputs.rank() < 2 {
            return Err(DataError::CountMismatch {
                images: n,
                labels: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabeledDataset {
            inputs,
            labels,
            num_classes,
            provenance: LabelProvenance::True,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> LabelProvenance {
        self.provenance
    }

    /// Per-sample input shape (without the leading count).
    pub fn sample_shape(&self) -> &[usize] {
        &self.inputs.shape()[1..]
    }

    pub fn is_image(&self) -> bool {
        self.sample_shape().len() == 3
    }

    pub(crate) fn with_labels(&self, labels: Vec<usize>, provenance: LabelProvenance) -> Self {
        LabeledDataset {
            inputs: self.inputs.clone(),
            labels,
            num_classes: self.num_classes,
            provenance,
        }
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let inputs = self
            .inputs
            .gather_rows(indices)
            .map_err(|e| DataError::Invalid(e.to_string()))?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(LabeledDataset {
            inputs,
            labels,
            num_classes: self.num_classes,
            provenance: self.provenance,
        })
    }

    /// Splits into the first `n` samples and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self)> {
        if n == 0 || n >= self.len() {
            return Err(DataError::Invalid(format!(
                "split point {n} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        Ok((self.subset(&head)?, self.subset(&tail)?))
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Maps a byte linearly from `[0, 255]` onto `[-1, 1]`.
pub(crate) fn scale_byte(b: u8) -> f64 {
    b as f64 / 127.5 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_scaling_hits_both_ends() {
        assert_eq!(scale_byte(0), -1.0);
        assert_eq!(scale_byte(255), 1.0);
    }

    #[test]
    fn label_out_of_range_rejected() {
        let x = Tensor::zeros(&[2, 3]);
        assert!(LabeledDataset::new(x, vec![0, 4], 4).is_err());
    }

    #[test]
    fn count_mismatch_rejected() {
        let x = Tensor::zeros(&[2, 3]);
        assert!(matches!(
            LabeledDataset::new(x, vec![0], 2),
            Err(DataError::CountMismatch { .. })
        ));
    }
}
