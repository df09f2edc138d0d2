use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_loss, Result, TrainError};
use crate::data::{batches, LabeledDataset};
use crate::models::{ArchitectureDescriptor, Network, Role};
use crate::rng;
use crate::tensor::{Graph, Optimizer, OptimizerKind, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub generator: ArchitectureDescriptor,
    pub discriminator: ArchitectureDescriptor,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl GanConfig {
    /// Adam with lr 2e-4, β₁ 0.5, β₂ 0.999 for both players.
    pub fn new(generator: ArchitectureDescriptor, discriminator: ArchitectureDescriptor, epochs: usize) -> Self {
        GanConfig {
            generator,
            discriminator,
            epochs,
            batch_size: 64,
            optimizer: OptimizerKind::Adam {
                lr: 2e-4,
                beta1: 0.5,
                beta2: 0.999,
                eps: 1e-8,
            },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Config("epochs and batch size must be at least 1".into()));
        }
        if self.generator.role != Role::Generator || self.discriminator.role != Role::Discriminator {
            return Err(TrainError::Config("need a generator and a discriminator descriptor".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanEpoch {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    /// Mean sigmoid output of the discriminator on real / generated training batches.
    pub d_real: f64,
    pub d_fake: f64,
    /// Real-vs-fake accuracy on held-out real samples and as many fresh fakes.
    pub heldout_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GanReport {
    pub epochs: Vec<GanEpoch>,
    pub config: GanConfig,
}

pub const GAN_CSV_HEADER: &str = "epoch,d_loss,g_loss,d_real,d_fake,heldout_acc";

impl GanReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{GAN_CSV_HEADER}\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.epoch, e.d_loss, e.g_loss, e.d_real, e.d_fake, e.heldout_accuracy
            ));
        }
        out
    }
}

fn latent_batch(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Tensor {
    let data = (0..rows * dim).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::new(vec![rows, dim], data).expect("latent shape")
}

fn mean_sigmoid(logits: &Tensor) -> f64 {
    logits.data().iter().map(|&x| 1.0 / (1.0 + (-x).exp())).sum::<f64>() / logits.len() as f64
}

/// Alternating updates: the discriminator ascends `log D(x) + log(1 - D(G(z)))`,
/// then the generator ascends the non-saturating `log D(G(z))`.
pub fn train_gan(config: &GanConfig, train: &LabeledDataset, held_out: &LabeledDataset) -> Result<(Network, Network, GanReport)> {
    config.validate()?;
    let mut gen = Network::build(config.generator.clone())?;
    let mut disc = Network::build(config.discriminator.clone())?;
    if gen.output_shape() != train.sample_shape() || disc.input_shape() != train.sample_shape() {
        return Err(TrainError::Config(format!(
            "generator output {:?} / discriminator input {:?} must match data shape {:?}",
            gen.output_shape(),
            disc.input_shape(),
            train.sample_shape()
        )));
    }
    let latent = gen.input_shape()[0];
    let mut g_opt = Optimizer::new(config.optimizer, 0.0, gen.params());
    let mut d_opt = Optimizer::new(config.optimizer, 0.0, disc.params());
    let mut noise = rng::stream(config.seed, rng::GAN_NOISE);
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let (mut d_loss_sum, mut g_loss_sum, mut real_sum, mut fake_sum) = (0.0, 0.0, 0.0, 0.0);
        let all = batches(train, config.batch_size, config.seed, epoch)?;
        let steps = all.len() as f64;
        for (bi, batch) in all.into_iter().enumerate() {
            let b = batch.labels.len();

            // discriminator
            let z = latent_batch(&mut noise, b, latent);
            let fake = gen.infer(&z)?;
            let mut g = Graph::new();
            let dp = disc.bind(&mut g, true);
            let xr = g.constant(batch.inputs);
            let xf = g.constant(fake);
            let real_logits = disc.forward(&mut g, xr, &dp)?;
            let fake_logits = disc.forward(&mut g, xf, &dp)?;
            let lr = g.bce_with_logits(real_logits, &vec![1.0; b])?;
            let lf = g.bce_with_logits(fake_logits, &vec![0.0; b])?;
            let d_loss = g.add(lr, lf)?;
            let d_loss_value = g.value(d_loss).item().expect("scalar");
            check_loss(d_loss_value, epoch + 1, bi)?;
            real_sum += mean_sigmoid(g.value(real_logits));
            fake_sum += mean_sigmoid(g.value(fake_logits));
            let mut grads = g.backward(d_loss)?;
            let dg: Vec<Tensor> = dp.iter().map(|&p| grads.take(p).expect("trainable")).collect();
            d_opt.step(disc.params_mut(), &dg)?;

            // generator
            let z = latent_batch(&mut noise, b, latent);
            let mut g = Graph::new();
            let gp = gen.bind(&mut g, true);
            let dp = disc.bind(&mut g, false);
            let zv = g.constant(z);
            let x = gen.forward(&mut g, zv, &gp)?;
            let logits = disc.forward(&mut g, x, &dp)?;
            let g_loss = g.bce_with_logits(logits, &vec![1.0; b])?;
            let g_loss_value = g.value(g_loss).item().expect("scalar");
            check_loss(g_loss_value, epoch + 1, bi)?;
            let mut grads = g.backward(g_loss)?;
            let gg: Vec<Tensor> = gp.iter().map(|&p| grads.take(p).expect("trainable")).collect();
            g_opt.step(gen.params_mut(), &gg)?;

            d_loss_sum += d_loss_value;
            g_loss_sum += g_loss_value;
        }
        let heldout_accuracy = heldout_accuracy(&gen, &disc, held_out, config.seed, epoch)?;
        records.push(GanEpoch {
            epoch: epoch + 1,
            d_loss: d_loss_sum / steps,
            g_loss: g_loss_sum / steps,
            d_real: real_sum / steps,
            d_fake: fake_sum / steps,
            heldout_accuracy,
        });
    }
    Ok((
        gen,
        disc,
        GanReport {
            epochs: records,
            config: config.clone(),
        },
    ))
}

/// Evaluation fakes come from their own stream so evaluating never shifts
/// the training noise sequence.
fn heldout_accuracy(gen: &Network, disc: &Network, held_out: &LabeledDataset, seed: u64, epoch: usize) -> Result<f64> {
    let n = held_out.len();
    let mut eval_rng = rng::stream(seed ^ 0x5eed_e7a1, rng::GAN_NOISE + 1 + epoch as u64);
    let z = latent_batch(&mut eval_rng, n, gen.input_shape()[0]);
    let fake = gen.infer(&z)?;
    let real_logits = disc.infer(held_out.inputs())?;
    let fake_logits = disc.infer(&fake)?;
    let correct = real_logits.data().iter().filter(|&&v| v > 0.0).count()
        + fake_logits.data().iter().filter(|&&v| v <= 0.0).count();
    Ok(correct as f64 / (2 * n) as f64)
}
