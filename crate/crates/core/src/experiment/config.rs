use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ExpError, Result};
use crate::data::{load_cifar10_binary, load_idx, synth_clusters, LabeledDataset, SynthSpec};
use crate::dissection::{DissectConfig, ObjectiveKind};
use crate::models::Preset;

/// Names the default output root; runs land in `<root>/<kind>`.
pub const OUTPUT_ENV: &str = "MEMLAB_OUT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Train,
    TrainGan,
    Dissect,
    SeedStudy,
    NoiseSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Train => "train",
            ExperimentKind::TrainGan => "train-gan",
            ExperimentKind::Dissect => "dissect",
            ExperimentKind::SeedStudy => "seed-study",
            ExperimentKind::NoiseSweep => "noise-sweep",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthDataset {
    pub num_classes: usize,
    pub per_class: usize,
    pub dims: usize,
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Trailing samples kept out of training for test accuracy.
    pub held_out: usize,
}

impl Default for SynthDataset {
    fn default() -> Self {
        SynthDataset {
            num_classes: 10,
            per_class: 100,
            dims: 16,
            center_scale: 0.8,
            noise_sigma: 0.35,
            seed: 0,
            held_out: 500,
        }
    }
}

impl SynthDataset {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            num_classes: self.num_classes,
            per_class: self.per_class,
            dims: self.dims,
            center_scale: self.center_scale,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Synth(SynthDataset),
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_images: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_labels: Option<PathBuf>,
        /// Keep only the first `limit` training samples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    Cifar10 {
        train: Vec<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synth(SynthDataset::default())
    }
}

fn truncate(ds: LabeledDataset, limit: Option<usize>) -> Result<LabeledDataset> {
    match limit {
        Some(n) if n < ds.len() => {
            let idx: Vec<usize> = (0..n).collect();
            Ok(ds.subset(&idx)?)
        }
        _ => Ok(ds),
    }
}

/// Training split and optional test split.
pub fn load_dataset(source: &DatasetSource) -> Result<(LabeledDataset, Option<LabeledDataset>)> {
    match source {
        DatasetSource::Synth(s) => {
            let all = synth_clusters(&s.spec())?;
            if s.held_out == 0 {
                return Ok((all, None));
            }
            if s.held_out >= all.len() {
                return Err(ExpError::Config(format!(
                    "held_out {} leaves no training samples out of {}",
                    s.held_out,
                    all.len()
                )));
            }
            let (train, test) = all.split_at(all.len() - s.held_out)?;
            Ok((train, Some(test)))
        }
        DatasetSource::Idx {
            images,
            labels,
            test_images,
            test_labels,
            limit,
        } => {
            let train = truncate(load_idx(images, labels)?, *limit)?;
            let test = match (test_images, test_labels) {
                (Some(i), Some(l)) => Some(load_idx(i, l)?),
                (None, None) => None,
                _ => return Err(ExpError::Config("test_images and test_labels go together".into())),
            };
            Ok((train, test))
        }
        DatasetSource::Cifar10 { train, test, limit } => {
            let mut parts = train.iter().map(load_cifar10_binary);
            let first = parts
                .next()
                .ok_or_else(|| ExpError::Config("cifar10 needs at least one training batch file".into()))??;
            let mut inputs = first.inputs().data().to_vec();
            let mut labels = first.labels().to_vec();
            for part in parts {
                let part = part?;
                inputs.extend_from_slice(part.inputs().data());
                labels.extend_from_slice(part.labels());
            }
            let n = labels.len();
            let tensor = crate::tensor::Tensor::new(vec![n, 3, 32, 32], inputs).map_err(|e| ExpError::Runtime(e.to_string()))?;
            let all = LabeledDataset::new(tensor, labels, 10)?;
            let test = test.as_ref().map(load_cifar10_binary).transpose()?;
            Ok((truncate(all, *limit)?, test))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Preset,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            preset: Preset::MlpSmall,
            hidden: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Pad-crop-flip augmentation; only meaningful for image data.
    pub augment: bool,
    pub track_input_gradients: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            epochs: 100,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            augment: false,
            track_input_gradients: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanSection {
    pub generator: Preset,
    pub discriminator: Preset,
    pub epochs: usize,
    pub batch_size: usize,
    pub latent_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for GanSection {
    fn default() -> Self {
        GanSection {
            generator: Preset::GenSmall,
            discriminator: Preset::DiscSmall,
            epochs: 200,
            batch_size: 64,
            latent_dim: crate::models::DEFAULT_LATENT_DIM,
            hidden: None,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
        }
    }
}

/// Where dissection patterns come from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum GeneratorSource {
    /// Closed-form cluster sampler; synthetic data only.
    #[default]
    Cluster,
    Checkpoint(PathBuf),
}

impl From<String> for GeneratorSource {
    fn from(s: String) -> Self {
        if s == "cluster" {
            GeneratorSource::Cluster
        } else {
            GeneratorSource::Checkpoint(PathBuf::from(s))
        }
    }
}

impl From<GeneratorSource> for String {
    fn from(g: GeneratorSource) -> Self {
        match g {
            GeneratorSource::Cluster => "cluster".into(),
            GeneratorSource::Checkpoint(p) => p.display().to_string(),
        }
    }
}

impl FromStr for GeneratorSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(s.to_string().into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DissectionSection {
    pub seeds_per_class: usize,
    pub seed_base: u64,
    pub lr: f64,
    pub iterations: usize,
    pub objective: ObjectiveKind,
    pub generator: GeneratorSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    pub probes: Vec<PathBuf>,
    /// Patterns exported per class (images for image data, one CSV otherwise).
    pub export_per_class: usize,
}

impl Default for DissectionSection {
    fn default() -> Self {
        let d = DissectConfig::default();
        DissectionSection {
            seeds_per_class: d.seeds_per_class,
            seed_base: d.seed_base,
            lr: d.lr,
            iterations: d.iterations,
            objective: d.objective,
            generator: GeneratorSource::Cluster,
            reference: None,
            probes: Vec::new(),
            export_per_class: 1,
        }
    }
}

impl DissectionSection {
    pub fn dissect_config(&self) -> DissectConfig {
        DissectConfig {
            seeds_per_class: self.seeds_per_class,
            seed_base: self.seed_base,
            lr: self.lr,
            iterations: self.iterations,
            objective: self.objective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedStudySection {
    /// Train accuracy a run must exceed to count as fitted.
    pub fit_threshold: f64,
}

impl Default for SeedStudySection {
    fn default() -> Self {
        SeedStudySection { fit_threshold: 0.5 }
    }
}

/// A complete experiment description. Empty `seeds` / `noise_levels` take
/// per-kind defaults when resolved.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Concurrent runs within a sweep; defaults to the available cores.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub seeds: Vec<u64>,
    pub noise_levels: Vec<f64>,
    /// Shared by every run at a given noise level.
    pub noise_seed: u64,
    pub dataset: DatasetSource,
    pub model: ModelSection,
    pub training: TrainingSection,
    pub gan: GanSection,
    pub dissection: DissectionSection,
    pub seed_study: SeedStudySection,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ExpError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills per-kind defaults for seeds and noise levels.
    pub fn resolved(mut self) -> Self {
        if self.seeds.is_empty() {
            self.seeds = match self.kind {
                ExperimentKind::SeedStudy => (1..=10).collect(),
                ExperimentKind::NoiseSweep => vec![1, 2],
                _ => vec![1],
            };
        }
        if self.noise_levels.is_empty() {
            self.noise_levels = match self.kind {
                ExperimentKind::NoiseSweep => vec![0.0, 0.25, 0.5, 0.75, 1.0],
                _ => vec![0.0],
            };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExpError::Config(msg));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad(format!("duplicate seeds in {:?}", self.seeds));
        }
        if let Some(p) = self.noise_levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("noise level {p} outside [0, 1]"));
        }
        let mut levels = self.noise_levels.clone();
        levels.sort_by(f64::total_cmp);
        if levels.windows(2).any(|w| w[0] == w[1]) {
            return bad(format!("duplicate noise levels in {:?}", self.noise_levels));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        let t = &self.training;
        if t.epochs == 0 || t.batch_size == 0 || !(t.lr > 0.0) || !(0.0..1.0).contains(&t.momentum) || !(t.weight_decay >= 0.0) {
            return bad(format!("invalid training section {t:?}"));
        }
        match self.kind {
            ExperimentKind::SeedStudy => {
                if self.seeds.len() < 2 {
                    return bad(format!("seed-study needs at least 2 seeds, got {}", self.seeds.len()));
                }
                if self.noise_levels.len() != 1 {
                    return bad("seed-study takes exactly one noise level".into());
                }
            }
            ExperimentKind::NoiseSweep => {
                if self.noise_levels.len() < 3 || !strictly_increasing(&self.noise_levels) {
                    return bad(format!(
                        "noise-sweep needs at least 3 strictly increasing levels, got {:?}",
                        self.noise_levels
                    ));
                }
                if self.seeds.len() < 2 {
                    return bad(format!("noise-sweep needs at least 2 seeds per level, got {}", self.seeds.len()));
                }
            }
            ExperimentKind::Dissect => {
                let d = &self.dissection;
                if d.reference.is_none() || d.probes.is_empty() {
                    return bad("dissect needs a reference checkpoint and at least one probe".into());
                }
            }
            ExperimentKind::TrainGan => {
                let g = &self.gan;
                if g.epochs == 0 || g.batch_size == 0 || g.latent_dim == 0 || !(g.lr > 0.0) {
                    return bad(format!("invalid gan section {g:?}"));
                }
            }
            ExperimentKind::Train => {}
        }
        if matches!(self.kind, ExperimentKind::Dissect | ExperimentKind::NoiseSweep) {
            self.dissection.dissect_config().validate()?;
            if self.dissection.generator == GeneratorSource::Cluster && !matches!(self.dataset, DatasetSource::Synth(_)) {
                return bad("the cluster generator needs a synth dataset; pass a generator checkpoint".into());
            }
        }
        Ok(())
    }

    /// Hash of every field that affects results (not the output location or
    /// the worker count).
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.workers = None;
        super::sha256_hex(c.to_text().as_bytes())
    }

    /// Explicit `output_dir`, else `$MEMLAB_OUT/<kind>`, else `runs/<kind>`.
    pub fn output_root(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        let base = std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        base.join(self.kind.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_and_defaults() {
        let c = ExperimentConfig::from_text("kind = \"noise-sweep\"\n[training]\nepochs = 5\n").unwrap().resolved();
        assert_eq!(c.noise_levels, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.training.epochs, 5);
        assert_eq!(c.training.batch_size, 32);
        assert_eq!(ExperimentConfig::from_text(&c.to_text()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn dataset_sections_parse() {
        let c = ExperimentConfig::from_text(
            "[dataset]\nsource = \"idx\"\nimages = \"a\"\nlabels = \"b\"\n[dissection]\ngenerator = \"g.nnck\"\n",
        )
        .unwrap();
        assert!(matches!(c.dataset, DatasetSource::Idx { .. }));
        assert_eq!(c.dissection.generator, GeneratorSource::Checkpoint("g.nnck".into()));
        let c = ExperimentConfig::from_text("[dataset]\nsource = \"synth\"\ndims = 2\n").unwrap();
        assert!(matches!(c.dataset, DatasetSource::Synth(SynthDataset { dims: 2, num_classes: 10, .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_text("epochz = 3\n").is_err());
        assert!(ExperimentConfig::from_text("[model]\npreset = \"vgg11\"\n").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut c = ExperimentConfig::new(ExperimentKind::Train).resolved();
        c.noise_levels = vec![1.5];
        assert!(matches!(c.validate(), Err(ExpError::Config(_))));
        let mut c = ExperimentConfig::new(ExperimentKind::NoiseSweep).resolved();
        c.noise_levels = vec![0.0, 0.5, 0.5, 1.0];
        assert!(c.validate().is_err());
        c.noise_levels = vec![0.0, 0.5];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::SeedStudy).resolved();
        c.seeds = vec![3];
        assert!(c.validate().is_err());
        c.seeds = vec![];
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::new(ExperimentKind::Dissect).resolved().validate().is_err());
    }

    #[test]
    fn hash_ignores_location_only() {
        let a = ExperimentConfig::new(ExperimentKind::Train).resolved();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        b.workers = Some(3);
        assert_eq!(a.config_hash(), b.config_hash());
        b.training.epochs += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.noise_seed = 7;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn synth_split_sizes() {
        let (train, test) = load_dataset(&DatasetSource::default()).unwrap();
        assert_eq!((train.len(), test.unwrap().len()), (500, 500));
    }
}
