use rand::seq::SliceRandom;

use super::{DataError, LabeledDataset, Result};
use crate::rng;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

/// Seeded shuffle of `0..n` for one epoch.
pub fn epoch_permutation(n: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(shuffle_seed, rng::SHUFFLE_BASE + epoch as u64));
    order
}

/// Consecutive chunks of the epoch permutation; the last may be short.
pub fn batches(dataset: &LabeledDataset, batch_size: usize, shuffle_seed: u64, epoch: usize) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(DataError::Invalid("batch size must be at least 1".into()));
    }
    epoch_permutation(dataset.len(), shuffle_seed, epoch)
        .chunks(batch_size)
        .map(|idx| {
            let inputs = dataset
                .inputs()
                .gather_rows(idx)
                .map_err(|e| DataError::Invalid(e.to_string()))?;
            Ok(Batch {
                indices: idx.to_vec(),
                labels: idx.iter().map(|&i| dataset.labels()[i]).collect(),
                inputs,
            })
        })
        .collect()
}
