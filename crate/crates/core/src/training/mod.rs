//! Classifier training with per-epoch input-gradient telemetry, and
//! alternating GAN training.

mod classifier;
mod gan;
mod report;

pub use classifier::{accuracy, input_gradient_magnitude, train_classifier, TrainConfig};
pub use gan::{train_gan, GanConfig, GanEpoch, GanReport, GAN_CSV_HEADER};
pub use report::{parse_training_csv, EpochRecord, TrainingReport, TRAINING_CSV_HEADER};

use thiserror::Error;

use crate::data::DataError;
use crate::models::ModelError;
use crate::tensor::TensorError;

/// Losses above this (or non-finite) abort a run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

pub(crate) fn check_loss(loss: f64, epoch: usize, batch: usize) -> Result<()> {
    if !loss.is_finite() || loss > DIVERGENCE_THRESHOLD {
        return Err(TrainError::Diverged { epoch, batch, loss });
    }
    Ok(())
}
