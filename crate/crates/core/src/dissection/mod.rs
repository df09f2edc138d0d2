//! Latent-space activation maximization through a frozen generator and the
//! class-averaged KL dissimilarity between two classifiers.
//!
//! For every class `j` and seed, a latent code is pushed uphill on the
//! reference classifier's class-`j` score, the generated pattern is fed to
//! both classifiers, and the KL divergence of their softmax outputs is
//! recorded. `dist_mean` averages seeds within a class, then classes.

mod ascent;
mod dissect;
mod export;
mod generator;
mod kl;

pub use ascent::{activation_maximize, activation_maximize_many, ascend, AscentOutcome, ClassObjective, LatentObjective, ObjectiveKind, PatternResult};
pub use dissect::{dissect_pair, DissectConfig, DissectionResult, KlTerm, DISSECTION_CSV_HEADER, DISSECTION_SUMMARY_HEADER};
pub use export::{patterns_to_csv, write_pnm};
pub use generator::{ClusterGenerator, LatentGenerator};
pub use kl::{kl_divergence, KL_EPSILON};

use thiserror::Error;

use crate::models::ModelError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum DissectError {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("incompatible models: {0}")]
    Incompatible(String),
    #[error("objective became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid dissection config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DissectError>;
