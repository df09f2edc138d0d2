use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, LabeledDataset, Result};
use crate::rng;
use crate::tensor::Tensor;

/// Gaussian clusters around seeded centers, one cluster per class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub dims: usize,
    /// Centers are drawn uniformly from `[-center_scale, center_scale]^dims`.
    pub center_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_classes: 10,
            per_class: 50,
            dims: 16,
            center_scale: 0.8,
            noise_sigma: 0.35,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.per_class < 1 || self.dims < 1 {
            return Err(DataError::Invalid(format!(
                "synthetic clusters need at least 2 classes, 1 sample per class and 1 dimension, got {self:?}"
            )));
        }
        if !(self.center_scale > 0.0 && self.center_scale <= 1.0) || !(self.noise_sigma >= 0.0) {
            return Err(DataError::Invalid(format!(
                "center_scale must lie in (0, 1] and noise_sigma must be non-negative, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `[num_classes, dims]` cluster centers for the spec's seed.
pub fn cluster_centers(spec: &SynthSpec) -> Tensor {
    let mut r = rng::stream(spec.seed, rng::CENTERS);
    let data = (0..spec.num_classes * spec.dims)
        .map(|_| r.random_range(-spec.center_scale..=spec.center_scale))
        .collect();
    Tensor::new(vec![spec.num_classes, spec.dims], data).expect("center shape")
}

/// Samples are ordered sample-major (`sample 0 of every class`, then
/// `sample 1 of every class`, ...), so any prefix of `k * num_classes`
/// samples is class balanced. Values are clamped to `[-1, 1]`.
pub fn synth_clusters(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let centers = cluster_centers(spec);
    let mut r = rng::stream(spec.seed, rng::SAMPLES);
    let (c, d) = (spec.num_classes, spec.dims);
    let n = c * spec.per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.per_class {
        for class in 0..c {
            let center = &centers.data()[class * d..(class + 1) * d];
            for &mu in center {
                let z: f64 = StandardNormal.sample(&mut r);
                data.push((mu + spec.noise_sigma * z).clamp(-1.0, 1.0));
            }
            labels.push(class);
        }
    }
    let inputs = Tensor::new(vec![n, d], data).map_err(|e| DataError::Invalid(e.to_string()))?;
    LabeledDataset::new(inputs, labels, c)
}
