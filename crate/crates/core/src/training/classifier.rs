use serde::{Deserialize, Serialize};

use super::{check_loss, EpochRecord, Result, TrainError, TrainingReport};
use crate::data::{augment, batches, AugmentationPolicy, LabeledDataset};
use crate::models::{ArchitectureDescriptor, ModelError, Network, Role};
use crate::tensor::{Graph, Optimizer, OptimizerKind, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub descriptor: ArchitectureDescriptor,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    /// L2 coefficient added to parameter gradients; 0 disables it.
    pub weight_decay: f64,
    pub augmentation: AugmentationPolicy,
    /// Drives batch order and augmentation draws. Parameter init comes from
    /// the descriptor's `init_seed`.
    pub seed: u64,
    pub track_input_gradients: bool,
}

impl TrainConfig {
    /// Constant-rate SGD with momentum 0.9, lr 0.01 and batches of 128.
    pub fn new(descriptor: ArchitectureDescriptor, epochs: usize) -> Self {
        TrainConfig {
            descriptor,
            epochs,
            batch_size: 128,
            optimizer: OptimizerKind::SgdMomentum {
                lr: 0.01,
                momentum: 0.9,
            },
            weight_decay: 0.0,
            augmentation: AugmentationPolicy::disabled(),
            seed: 0,
            track_input_gradients: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if !(self.optimizer.lr() > 0.0) {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.optimizer.lr())));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(TrainError::Config(format!("weight decay must be non-negative, got {}", self.weight_decay)));
        }
        if self.descriptor.role != Role::Classifier {
            return Err(TrainError::Config(format!("descriptor is a {}, not a classifier", self.descriptor.role)));
        }
        Ok(())
    }
}

struct StepOutput {
    loss: f64,
    param_grads: Vec<Tensor>,
    /// Per-sample `Σ|∂ℓᵢ/∂xᵢ|`, when requested.
    input_magnitudes: Option<Vec<f64>>,
}

/// Mean cross-entropy over the batch and its gradients. The input gradient
/// of the mean loss is rescaled by the batch size so each sample's row is
/// the gradient of that sample's own loss.
fn loss_and_grads(net: &Network, inputs: &Tensor, labels: &[usize], track_inputs: bool) -> Result<StepOutput> {
    let mut g = Graph::new();
    let x = g.leaf(inputs.clone(), track_inputs);
    let params = net.bind(&mut g, true);
    let logits = net.forward(&mut g, x, &params)?;
    let loss = g.cross_entropy(logits, labels)?;
    let loss_value = g.value(loss).item().expect("scalar loss");
    let mut grads = g.backward(loss)?;

    let input_magnitudes = if track_inputs {
        let gx = grads.take(x).expect("input leaf tracks gradients");
        let b = labels.len();
        let row = gx.len() / b;
        Some(
            gx.data()
                .chunks(row)
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>() * b as f64)
                .collect(),
        )
    } else {
        None
    };
    let param_grads = params
        .iter()
        .map(|&p| grads.take(p).expect("parameter leaf tracks gradients"))
        .collect();
    Ok(StepOutput {
        loss: loss_value,
        param_grads,
        input_magnitudes,
    })
}

/// `G(x) = Σⱼ |∂ℓ/∂xⱼ|` for every sample of a batch, where `ℓ` is that
/// sample's cross-entropy under the current (frozen) parameters.
pub fn input_gradient_magnitude(net: &Network, inputs: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    if net.role() != Role::Classifier {
        return Err(ModelError::WrongRole {
            expected: Role::Classifier,
            actual: net.role(),
        }
        .into());
    }
    Ok(loss_and_grads(net, inputs, labels, true)?
        .input_magnitudes
        .expect("tracked"))
}

/// Fraction of samples whose argmax logit equals the label.
pub fn accuracy(net: &Network, dataset: &LabeledDataset) -> Result<f64> {
    const CHUNK: usize = 1024;
    let n = dataset.len();
    let mut correct = 0;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let logits = net.logits(&dataset.inputs().slice_rows(start, end)?)?;
        let c = *logits.shape().last().expect("class axis");
        for (row, &label) in logits.data().chunks(c).zip(&dataset.labels()[start..end]) {
            if argmax(row) == label {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / n as f64)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn check_dataset(net: &Network, ds: &LabeledDataset, what: &str) -> Result<()> {
    if Some(ds.num_classes()) != net.num_classes() {
        return Err(TrainError::Config(format!(
            "{what} set has {} classes, classifier has {:?}",
            ds.num_classes(),
            net.num_classes()
        )));
    }
    Ok(())
}

/// Runs the seeded epoch/batch loop. `Ḡ` for an epoch is the mean of `G(x)`
/// over all training samples, each taken from its batch's forward pass
/// before that batch's update.
pub fn train_classifier(
    config: &TrainConfig,
    train: &LabeledDataset,
    test: Option<&LabeledDataset>,
) -> Result<(Network, TrainingReport)> {
    config.validate()?;
    let mut net = Network::build(config.descriptor.clone())?;
    check_dataset(&net, train, "training")?;
    if let Some(t) = test {
        check_dataset(&net, t, "test")?;
    }
    let mut opt = Optimizer::new(config.optimizer, config.weight_decay, net.params());
    let n = train.len();
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut g_sum = 0.0;
        for (bi, batch) in batches(train, config.batch_size, config.seed, epoch)?.into_iter().enumerate() {
            let inputs = if config.augmentation.enabled {
                let aug_seed = config.seed ^ ((epoch as u64) << 32 | bi as u64).rotate_left(17);
                augment(&batch.inputs, &config.augmentation, aug_seed)?
            } else {
                batch.inputs
            };
            let step = loss_and_grads(&net, &inputs, &batch.labels, config.track_input_gradients)?;
            check_loss(step.loss, epoch + 1, bi)?;
            loss_sum += step.loss * batch.labels.len() as f64;
            if let Some(m) = &step.input_magnitudes {
                g_sum += m.iter().sum::<f64>();
            }
            opt.step(net.params_mut(), &step.param_grads)?;
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            train_accuracy: accuracy(&net, train)?,
            test_accuracy: test.map(|t| accuracy(&net, t)).transpose()?,
            mean_train_loss: loss_sum / n as f64,
            gradient_magnitude: config.track_input_gradients.then(|| g_sum / n as f64),
        };
        log::debug!("{record:?}");
        records.push(record);
    }
    Ok((
        net,
        TrainingReport {
            records,
            config: config.clone(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LayerSpec;

    fn linear_classifier(weights: Vec<f64>, bias: Vec<f64>) -> Network {
        let d = ArchitectureDescriptor {
            role: Role::Classifier,
            input_shape: vec![2],
            num_classes: Some(2),
            latent_dim: None,
            init_seed: 0,
            layers: vec![LayerSpec::Dense { input: 2, output: 2 }],
        };
        Network::from_parts(d, vec![Tensor::new(vec![2, 2], weights).unwrap(), Tensor::vector(bias)]).unwrap()
    }

    #[test]
    fn input_ignoring_classifier_has_zero_magnitude() {
        let net = linear_classifier(vec![0.0; 4], vec![0.3, -0.1]);
        let x = Tensor::new(vec![3, 2], vec![1., 2., -1., 0.5, 0., 0.]).unwrap();
        assert_eq!(input_gradient_magnitude(&net, &x, &[0, 1, 1]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn magnitude_matches_hand_chain_rule() {
        // logits z = W x + b; ∂ℓ/∂x = Wᵀ (softmax(z) - onehot(y))
        let w: [f64; 4] = [1.0, -2.0, 0.5, 3.0];
        let b: [f64; 2] = [0.1, -0.2];
        let x: [f64; 2] = [0.4, -0.7];
        let z0 = w[0] * x[0] + w[1] * x[1] + b[0];
        let z1 = w[2] * x[0] + w[3] * x[1] + b[1];
        let p0 = 1.0 / (1.0 + (z1 - z0).exp());
        let (d0, d1) = (p0 - 1.0, 1.0 - p0); // label 0
        let gx0 = w[0] * d0 + w[2] * d1;
        let gx1 = w[1] * d0 + w[3] * d1;
        let want = gx0.abs() + gx1.abs();

        let net = linear_classifier(w.to_vec(), b.to_vec());
        let got = input_gradient_magnitude(&net, &Tensor::new(vec![1, 2], x.to_vec()).unwrap(), &[0]).unwrap();
        assert!((got[0] - want).abs() < 1e-14, "{} vs {want}", got[0]);

        // and against central differences of the per-sample loss
        let loss = |x0: f64, x1: f64| {
            let a = w[0] * x0 + w[1] * x1 + b[0];
            let c = w[2] * x0 + w[3] * x1 + b[1];
            -(a - (a.exp() + c.exp()).ln())
        };
        let h = 1e-6;
        let fd = ((loss(x[0] + h, x[1]) - loss(x[0] - h, x[1])) / (2.0 * h)).abs()
            + ((loss(x[0], x[1] + h) - loss(x[0], x[1] - h)) / (2.0 * h)).abs();
        assert!((got[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn magnitude_is_batch_size_invariant() {
        let net = linear_classifier(vec![1.0, -2.0, 0.5, 3.0], vec![0.1, -0.2]);
        let x = Tensor::new(vec![2, 2], vec![0.4, -0.7, 0.9, 0.2]).unwrap();
        let both = input_gradient_magnitude(&net, &x, &[0, 1]).unwrap();
        let first = input_gradient_magnitude(&net, &x.slice_rows(0, 1).unwrap(), &[0]).unwrap();
        assert!((both[0] - first[0]).abs() < 1e-14);
    }

    #[test]
    fn sharper_correct_prediction_has_smaller_magnitude() {
        let x = Tensor::new(vec![1, 2], vec![1.0, 0.5]).unwrap();
        let mild = linear_classifier(vec![2.0, 1.0, -2.0, -1.0], vec![0.0, 0.0]);
        let sharp = linear_classifier(vec![4.0, 2.0, -4.0, -2.0], vec![0.0, 0.0]);
        let g1 = input_gradient_magnitude(&mild, &x, &[0]).unwrap()[0];
        let g2 = input_gradient_magnitude(&sharp, &x, &[0]).unwrap()[0];
        assert!(g2 < g1, "{g2} !< {g1}");
    }

    #[test]
    fn zero_epochs_rejected() {
        let net = linear_classifier(vec![0.0; 4], vec![0.0; 2]);
        let cfg = TrainConfig::new(net.descriptor().clone(), 0);
        assert!(matches!(cfg.validate(), Err(TrainError::Config(_))));
    }

    #[test]
    fn divergence_aborts_with_location() {
        use crate::data::{synth_clusters, SynthSpec};
        let ds = synth_clusters(&SynthSpec {
            num_classes: 2,
            per_class: 20,
            dims: 2,
            ..SynthSpec::default()
        })
        .unwrap();
        let mut cfg = TrainConfig::new(linear_classifier(vec![0.0; 4], vec![0.0; 2]).descriptor().clone(), 50);
        cfg.optimizer = OptimizerKind::SgdMomentum { lr: 1e9, momentum: 0.9 };
        cfg.batch_size = 4;
        match train_classifier(&cfg, &ds, None) {
            Err(TrainError::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
