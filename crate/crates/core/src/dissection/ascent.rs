use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DissectError, LatentGenerator, Result};
use crate::models::{Network, Role};
use crate::rng;
use crate::tensor::{Graph, Tensor, Var};

/// Which class score the ascent climbs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    Logit,
    Probability,
}

/// A per-row scalar objective over a latent batch `[S, latent_dim]`.
///
/// Rows must not interact, so that climbing their sum climbs each row.
pub trait LatentObjective {
    fn latent_dim(&self) -> usize;

    /// Returns one value per row, shaped `[S, 1]`.
    fn evaluate(&self, g: &mut Graph, z: Var) -> Result<Var>;
}

/// Class-`j` score of a frozen classifier applied to a frozen generator.
pub struct ClassObjective<'a> {
    pub classifier: &'a Network,
    pub generator: &'a dyn LatentGenerator,
    pub class: usize,
    pub kind: ObjectiveKind,
}

impl<'a> ClassObjective<'a> {
    pub fn new(classifier: &'a Network, generator: &'a dyn LatentGenerator, class: usize, kind: ObjectiveKind) -> Result<Self> {
        let classes = match (classifier.role(), classifier.num_classes()) {
            (Role::Classifier, Some(c)) => c,
            _ => {
                return Err(DissectError::Incompatible(format!(
                    "expected a classifier, got a {}",
                    classifier.role()
                )))
            }
        };
        if class >= classes {
            return Err(DissectError::Config(format!("class {class} out of range for {classes} classes")));
        }
        if generator.sample_shape() != classifier.input_shape() {
            return Err(DissectError::Incompatible(format!(
                "generator produces {:?}, classifier expects {:?}",
                generator.sample_shape(),
                classifier.input_shape()
            )));
        }
        Ok(ClassObjective {
            classifier,
            generator,
            class,
            kind,
        })
    }
}

impl LatentObjective for ClassObjective<'_> {
    fn latent_dim(&self) -> usize {
        self.generator.latent_dim()
    }

    fn evaluate(&self, g: &mut Graph, z: Var) -> Result<Var> {
        let x = self.generator.generate_on(g, z)?;
        let params = self.classifier.bind(g, false);
        let mut scores = self.classifier.forward(g, x, &params)?;
        if self.kind == ObjectiveKind::Probability {
            scores = g.softmax(scores)?;
        }
        let c = g.value(scores).shape()[1];
        let mut pick = Tensor::zeros(&[c, 1]);
        pick.data_mut()[self.class] = 1.0;
        let pick = g.constant(pick);
        Ok(g.matmul(scores, pick)?)
    }
}

#[derive(Clone, Debug)]
pub struct AscentOutcome {
    /// Final codes, `[S, latent_dim]`.
    pub z: Tensor,
    /// Objective per row, evaluated before each of the `iterations` steps.
    pub traces: Vec<Vec<f64>>,
}

/// Plain gradient ascent `z ← z + lr ∇f(z)` on every row of `z_init`.
pub fn ascend(objective: &dyn LatentObjective, z_init: &Tensor, lr: f64, iterations: usize) -> Result<AscentOutcome> {
    let n = objective.latent_dim();
    if z_init.rank() != 2 || z_init.shape()[1] != n {
        return Err(DissectError::Config(format!(
            "latent batch must be [S, {n}], got {:?}",
            z_init.shape()
        )));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(DissectError::Config(format!("learning rate must be positive, got {lr}")));
    }
    let rows = z_init.shape()[0];
    let mut z = z_init.clone();
    let mut traces = vec![Vec::with_capacity(iterations); rows];
    for it in 0..iterations {
        let mut g = Graph::new();
        let zv = g.leaf(z.clone(), true);
        let values = objective.evaluate(&mut g, zv)?;
        let vals = g.value(values).data();
        if vals.len() != rows {
            return Err(DissectError::Incompatible(format!(
                "objective returned {} values for {rows} rows",
                vals.len()
            )));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(DissectError::NonFinite { iteration: it });
        }
        for (trace, v) in traces.iter_mut().zip(vals) {
            trace.push(*v);
        }
        let total = g.sum(values);
        let grads = g.backward(total)?;
        let grad = grads.get(zv).expect("latent leaf tracks gradients");
        for (zi, gi) in z.data_mut().iter_mut().zip(grad.data()) {
            *zi += lr * gi;
        }
    }
    Ok(AscentOutcome { z, traces })
}

/// A pattern found by activation maximization, kept with its provenance.
#[derive(Clone, Debug)]
pub struct PatternResult {
    pub class: usize,
    pub seed: u64,
    pub z_init: Tensor,
    pub z_star: Tensor,
    pub x_star: Tensor,
    pub objective_trace: Vec<f64>,
}

/// Standard-normal starting code for `seed`.
pub(crate) fn initial_latent(seed: u64, dim: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, rng::LATENT);
    (0..dim).map(|_| StandardNormal.sample(&mut r)).collect()
}

/// Runs one ascent per seed in a single batch. Each row matches what a
/// one-seed run would produce.
pub fn activation_maximize_many(
    classifier: &Network,
    generator: &dyn LatentGenerator,
    class: usize,
    seeds: &[u64],
    lr: f64,
    iterations: usize,
    kind: ObjectiveKind,
) -> Result<Vec<PatternResult>> {
    let objective = ClassObjective::new(classifier, generator, class, kind)?;
    if seeds.is_empty() {
        return Ok(Vec::new());
    }
    let n = generator.latent_dim();
    let init: Vec<f64> = seeds.iter().flat_map(|&s| initial_latent(s, n)).collect();
    let z_init = Tensor::new(vec![seeds.len(), n], init)?;
    let outcome = ascend(&objective, &z_init, lr, iterations)?;
    let x = generator.generate(&outcome.z)?;
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(DissectError::NonFinite { iteration: iterations });
    }
    let sample = generator.sample_shape().to_vec();
    let per = x.len() / seeds.len();
    seeds
        .iter()
        .zip(outcome.traces)
        .enumerate()
        .map(|(i, (&seed, objective_trace))| {
            Ok(PatternResult {
                class,
                seed,
                z_init: Tensor::vector(z_init.data()[i * n..(i + 1) * n].to_vec()),
                z_star: Tensor::vector(outcome.z.data()[i * n..(i + 1) * n].to_vec()),
                x_star: Tensor::new(sample.clone(), x.data()[i * per..(i + 1) * per].to_vec())?,
                objective_trace,
            })
        })
        .collect()
}

pub fn activation_maximize(
    classifier: &Network,
    generator: &dyn LatentGenerator,
    class: usize,
    seed: u64,
    lr: f64,
    iterations: usize,
    kind: ObjectiveKind,
) -> Result<PatternResult> {
    let mut v = activation_maximize_many(classifier, generator, class, &[seed], lr, iterations, kind)?;
    Ok(v.pop().expect("one seed in, one pattern out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SynthSpec;
    use crate::dissection::ClusterGenerator;
    use crate::models::{Preset, PresetParams};

    /// `-‖z − c‖²` per row.
    struct Quadratic(Tensor);

    impl LatentObjective for Quadratic {
        fn latent_dim(&self) -> usize {
            self.0.len()
        }

        fn evaluate(&self, g: &mut Graph, z: Var) -> Result<Var> {
            let rows = g.value(z).shape()[0];
            let c: Vec<f64> = (0..rows).flat_map(|_| self.0.data().to_vec()).collect();
            let c = g.constant(Tensor::new(vec![rows, self.0.len()], c)?);
            let diff = g.sub(z, c)?;
            let sq = g.mul(diff, diff)?;
            let ones = g.constant(Tensor::full(&[self.0.len(), 1], -1.0));
            Ok(g.matmul(sq, ones)?)
        }
    }

    /// `w · z` per row.
    struct Linear(Tensor);

    impl LatentObjective for Linear {
        fn latent_dim(&self) -> usize {
            self.0.len()
        }

        fn evaluate(&self, g: &mut Graph, z: Var) -> Result<Var> {
            let w = g.constant(self.0.clone().reshape(&[self.0.len(), 1])?);
            Ok(g.matmul(z, w)?)
        }
    }

    #[test]
    fn quadratic_contracts_geometrically() {
        let c = Tensor::vector(vec![1.0, -2.0, 0.5]);
        let z0 = Tensor::new(vec![1, 3], vec![3.0, 0.0, -1.5]).unwrap();
        let d0 = 12f64.sqrt();
        let dist = |z: &Tensor| z.data().iter().zip(c.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        for t in [1usize, 10, 50] {
            let out = ascend(&Quadratic(c.clone()), &z0, 0.05, t).unwrap();
            assert!((dist(&out.z) - 0.9f64.powi(t as i32) * d0).abs() < 1e-9, "t={t}");
            assert_eq!(out.traces[0].len(), t);
            assert!(out.traces[0].windows(2).all(|w| w[1] >= w[0]));
        }
        // away from the origin the iterate stalls within an ulp of the optimum
        let origin = Tensor::vector(vec![0.0; 3]);
        let out = ascend(&Quadratic(origin), &z0, 0.05, 1000).unwrap();
        assert!(out.z.data().iter().all(|v| v.abs() < 1e-40));
    }

    #[test]
    fn linear_moves_along_weights() {
        let w = Tensor::vector(vec![0.5, -1.0]);
        let z0 = Tensor::new(vec![1, 2], vec![0.2, 0.3]).unwrap();
        let out = ascend(&Linear(w), &z0, 0.05, 100).unwrap();
        assert!((out.z.data()[0] - 2.7).abs() < 1e-12);
        assert!((out.z.data()[1] + 4.7).abs() < 1e-12);
        assert_eq!(out.traces[0].len(), 100);
    }

    fn setup() -> (Network, ClusterGenerator) {
        let spec = SynthSpec::default();
        let mut p = PresetParams::new(&[spec.dims], spec.num_classes, 4);
        p.hidden = Some(32);
        let net = Network::build(Preset::MlpSmall.descriptor(&p).unwrap()).unwrap();
        (net, ClusterGenerator::for_spec(&spec).unwrap())
    }

    #[test]
    fn batched_rows_match_single_runs() {
        let (net, gen) = setup();
        let many = activation_maximize_many(&net, &gen, 3, &[5, 9, 11], 0.05, 40, ObjectiveKind::Logit).unwrap();
        for r in &many {
            let one = activation_maximize(&net, &gen, 3, r.seed, 0.05, 40, ObjectiveKind::Logit).unwrap();
            assert_eq!(one.z_star.data(), r.z_star.data());
            assert_eq!(one.x_star.data(), r.x_star.data());
            assert_eq!(one.objective_trace, r.objective_trace);
        }
    }

    #[test]
    fn ascent_raises_objective_and_freezes_models() {
        let (net, gen) = setup();
        let (before, gen_before) = (net.checksum(), LatentGenerator::checksum(&gen));
        for kind in [ObjectiveKind::Logit, ObjectiveKind::Probability] {
            let r = activation_maximize(&net, &gen, 0, 1, 0.05, 200, kind).unwrap();
            assert!(r.objective_trace.last().unwrap() > r.objective_trace.first().unwrap());
            assert_eq!(r.x_star.shape(), &[16]);
        }
        assert_eq!(net.checksum(), before);
        assert_eq!(LatentGenerator::checksum(&gen), gen_before);
    }

    #[test]
    fn bad_class_and_shapes_rejected() {
        let (net, gen) = setup();
        assert!(activation_maximize(&net, &gen, 10, 0, 0.05, 1, ObjectiveKind::Logit).is_err());
        let other = ClusterGenerator::new(&Tensor::zeros(&[10, 4]), 1.0, 0.1).unwrap();
        assert!(activation_maximize(&net, &other, 0, 0, 0.05, 1, ObjectiveKind::Logit).is_err());
    }
}
