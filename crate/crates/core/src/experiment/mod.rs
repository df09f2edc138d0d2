//! Experiment orchestration: configs, run manifests, SVG figures and the
//! commands behind the `memlab` binary.

mod commands;
mod config;
mod manifest;
mod stats;
mod svg;

pub use commands::{cmd_dissect, cmd_noise_sweep, cmd_report, cmd_seed_study, cmd_train, cmd_train_gan, run, SEED_STUDY_CSV_HEADER, SWEEP_CSV_HEADER};
pub use config::{
    load_dataset, DatasetSource, DissectionSection, ExperimentConfig, ExperimentKind, GanSection, GeneratorSource, ModelSection, SeedStudySection, SynthDataset,
    TrainingSection, OUTPUT_ENV,
};
pub use manifest::{sha256_hex, Artifact, RunManifest, Timing, MANIFEST_FILE};
pub use stats::{ranks, spearman};
pub use svg::{emit_svg, emit_svg_panels, Bar, BarChart, LinePlot, Plot, Series};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::DataError;
use crate::dissection::DissectError;
use crate::models::ModelError;
use crate::training::TrainError;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExpError {
    /// 1 for config errors, 2 for runtime failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 1,
            ExpError::Runtime(_) => 2,
            ExpError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExpError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;

impl From<DataError> for ExpError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { path, source } => ExpError::Io { path, source },
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

impl From<ModelError> for ExpError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io { path, source } => ExpError::Io { path, source },
            ModelError::UnknownPreset(_) => ExpError::Config(e.to_string()),
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

impl From<TrainError> for ExpError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(msg) => ExpError::Config(msg),
            TrainError::Data(d) => d.into(),
            TrainError::Model(m) => m.into(),
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

impl From<DissectError> for ExpError {
    fn from(e: DissectError) -> Self {
        match e {
            DissectError::Io { path, source } => ExpError::Io { path, source },
            DissectError::Config(msg) => ExpError::Config(msg),
            DissectError::Model(m) => m.into(),
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| ExpError::io(path, e))
}
