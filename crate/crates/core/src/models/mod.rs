//! Architecture descriptors, network construction, inference entry points
//! and the `NNCK` checkpoint format.

mod checkpoint;
mod descriptor;
mod network;
mod presets;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use descriptor::{ArchitectureDescriptor, LayerSpec, Role};
pub use network::Network;
pub use presets::{Preset, PresetParams, DEFAULT_LATENT_DIM};

use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("layer {index} ({layer}) cannot follow {previous}: incoming shape {shape:?}")]
    IncompatibleLayers {
        index: usize,
        previous: String,
        layer: String,
        shape: Vec<usize>,
    },
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("expected input shape {expected:?} (optionally batched), got {got:?}")]
    InputShape { expected: Vec<usize>, got: Vec<usize> },
    #[error("operation needs a {expected} network, got a {actual}")]
    WrongRole { expected: Role, actual: Role },
    #[error("unknown preset {0:?} (known: mlp-small, mlp-alt, cnn-small, gen-small, disc-small)")]
    UnknownPreset(String),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("checkpoint version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("truncated {0} at offset {1}")]
    Truncated(&'static str, usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, ModelError>;
