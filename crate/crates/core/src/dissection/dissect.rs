use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{activation_maximize_many, kl_divergence, DissectError, LatentGenerator, ObjectiveKind, PatternResult, Result, KL_EPSILON};
use crate::models::Network;

pub const DISSECTION_CSV_HEADER: &str = "class,seed,kl";
pub const DISSECTION_SUMMARY_HEADER: &str = "dist_mean,dist_variance";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DissectConfig {
    pub seeds_per_class: usize,
    /// Seeds `seed_base .. seed_base + seeds_per_class`, shared by every class.
    pub seed_base: u64,
    pub lr: f64,
    pub iterations: usize,
    pub objective: ObjectiveKind,
}

impl Default for DissectConfig {
    fn default() -> Self {
        DissectConfig {
            seeds_per_class: 100,
            seed_base: 0,
            lr: 0.05,
            iterations: 1000,
            objective: ObjectiveKind::Logit,
        }
    }
}

impl DissectConfig {
    /// Ten seeds per class instead of a hundred.
    pub fn fast() -> Self {
        DissectConfig {
            seeds_per_class: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds_per_class == 0 {
            return Err(DissectError::Config("need at least one seed per class".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(DissectError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.seeds_per_class as u64).map(|s| self.seed_base + s).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlTerm {
    pub class: usize,
    pub seed: u64,
    pub kl: f64,
}

#[derive(Clone, Debug)]
pub struct DissectionResult {
    /// Class-major, seeds in config order.
    pub terms: Vec<KlTerm>,
    pub class_means: Vec<f64>,
    pub dist_mean: f64,
    /// Population variance over all terms.
    pub dist_variance: f64,
    pub patterns: Vec<PatternResult>,
    pub reference_checksum: String,
    pub probe_checksum: String,
}

impl DissectionResult {
    fn from_terms(terms: Vec<KlTerm>, classes: usize, patterns: Vec<PatternResult>, reference: &Network, probe: &Network) -> Self {
        let per = terms.len() / classes;
        let class_means: Vec<f64> = terms
            .chunks(per)
            .map(|c| c.iter().map(|t| t.kl).sum::<f64>() / per as f64)
            .collect();
        let dist_mean = class_means.iter().sum::<f64>() / classes as f64;
        let n = terms.len() as f64;
        let overall = terms.iter().map(|t| t.kl).sum::<f64>() / n;
        let dist_variance = terms.iter().map(|t| (t.kl - overall).powi(2)).sum::<f64>() / n;
        DissectionResult {
            terms,
            class_means,
            dist_mean,
            dist_variance,
            patterns,
            reference_checksum: reference.checksum(),
            probe_checksum: probe.checksum(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(DISSECTION_CSV_HEADER);
        out.push('\n');
        for t in &self.terms {
            out.push_str(&format!("{},{},{:e}\n", t.class, t.seed, t.kl));
        }
        out.push('\n');
        out.push_str(DISSECTION_SUMMARY_HEADER);
        out.push('\n');
        out.push_str(&format!("{:e},{:e}\n", self.dist_mean, self.dist_variance));
        out
    }
}

/// Measures how differently `probe` treats the patterns `reference` responds
/// to most strongly. Patterns are found on `reference` only; the score is
/// `KL(reference(x*) ‖ probe(x*))` averaged over seeds, then classes.
pub fn dissect_pair(
    reference: &Network,
    probe: &Network,
    generator: &dyn LatentGenerator,
    config: &DissectConfig,
) -> Result<DissectionResult> {
    config.validate()?;
    let classes = reference
        .num_classes()
        .ok_or_else(|| DissectError::Incompatible(format!("reference is a {}, not a classifier", reference.role())))?;
    if probe.num_classes() != Some(classes) {
        return Err(DissectError::Incompatible(format!(
            "reference has {classes} classes, probe has {:?}",
            probe.num_classes()
        )));
    }
    if probe.input_shape() != reference.input_shape() {
        return Err(DissectError::Incompatible(format!(
            "reference takes {:?}, probe takes {:?}",
            reference.input_shape(),
            probe.input_shape()
        )));
    }
    let seeds = config.seeds();
    let per_class: Vec<(Vec<KlTerm>, Vec<PatternResult>)> = (0..classes)
        .into_par_iter()
        .map(|class| {
            let patterns = activation_maximize_many(reference, generator, class, &seeds, config.lr, config.iterations, config.objective)?;
            let mut shape = vec![patterns.len()];
            shape.extend_from_slice(reference.input_shape());
            let xs: Vec<f64> = patterns.iter().flat_map(|p| p.x_star.data().to_vec()).collect();
            let xs = crate::tensor::Tensor::new(shape, xs)?;
            let p = reference.predict_probs(&xs)?;
            let q = probe.predict_probs(&xs)?;
            let terms = patterns
                .iter()
                .enumerate()
                .map(|(i, pat)| {
                    let row = i * classes..(i + 1) * classes;
                    Ok(KlTerm {
                        class,
                        seed: pat.seed,
                        kl: kl_divergence(&p.data()[row.clone()], &q.data()[row], KL_EPSILON)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((terms, patterns))
        })
        .collect::<Result<_>>()?;
    let (terms, patterns): (Vec<_>, Vec<_>) = per_class.into_iter().unzip();
    Ok(DissectionResult::from_terms(
        terms.into_iter().flatten().collect(),
        classes,
        patterns.into_iter().flatten().collect(),
        reference,
        probe,
    ))
}
