use super::{DissectError, Result};
use crate::data::{cluster_centers, SynthSpec};
use crate::models::{Network, Role};
use crate::tensor::{Graph, Tensor, Var};

/// A frozen map from latent codes `[S, latent_dim]` to data `[S, ...]`.
pub trait LatentGenerator: Sync {
    fn latent_dim(&self) -> usize;

    /// Shape of one generated sample.
    fn sample_shape(&self) -> &[usize];

    /// Records the generator on `g`; its own parameters stay frozen.
    fn generate_on(&self, g: &mut Graph, z: Var) -> Result<Var>;

    /// Fingerprint of the generator's parameters.
    fn checksum(&self) -> String;

    fn generate(&self, z: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let zv = g.constant(z.clone());
        let x = self.generate_on(&mut g, zv)?;
        Ok(g.value(x).clone())
    }
}

impl LatentGenerator for Network {
    fn latent_dim(&self) -> usize {
        self.input_shape()[0]
    }

    fn sample_shape(&self) -> &[usize] {
        self.output_shape()
    }

    fn generate_on(&self, g: &mut Graph, z: Var) -> Result<Var> {
        if self.role() != Role::Generator {
            return Err(DissectError::Incompatible(format!("expected a generator, got a {}", self.role())));
        }
        let params = self.bind(g, false);
        Ok(self.forward(g, z, &params)?)
    }

    fn checksum(&self) -> String {
        Network::checksum(self)
    }
}

/// Closed-form generator for cluster data.
///
/// The latent code splits into `C` mixing scores and `d` noise coordinates:
/// `x = tanh(softmax(β z_mix) · atanh(centers) + σ z_noise)`. A one-hot mix
/// with zero noise lands exactly on a center.
#[derive(Clone, Debug)]
pub struct ClusterGenerator {
    pre_centers: Tensor,
    sharpness: f64,
    sigma: f64,
    shape: [usize; 1],
}

const CENTER_CLAMP: f64 = 0.999;

impl ClusterGenerator {
    pub fn new(centers: &Tensor, sharpness: f64, sigma: f64) -> Result<Self> {
        if centers.rank() != 2 || centers.shape()[0] < 2 {
            return Err(DissectError::Config(format!(
                "centers must be [classes >= 2, dims], got {:?}",
                centers.shape()
            )));
        }
        if !(sharpness > 0.0 && sigma >= 0.0) {
            return Err(DissectError::Config(format!(
                "sharpness must be positive and sigma non-negative, got {sharpness} and {sigma}"
            )));
        }
        let pre_centers = centers.map(|c| c.clamp(-CENTER_CLAMP, CENTER_CLAMP).atanh());
        Ok(ClusterGenerator {
            shape: [centers.shape()[1]],
            pre_centers,
            sharpness,
            sigma,
        })
    }

    /// Generator matching the data produced by `synth_clusters(spec)`.
    pub fn for_spec(spec: &SynthSpec) -> Result<Self> {
        Self::new(&cluster_centers(spec), 4.0, spec.noise_sigma)
    }

    pub fn num_clusters(&self) -> usize {
        self.pre_centers.shape()[0]
    }

    fn selector(rows: usize, offset: usize, cols: usize) -> Tensor {
        let mut t = Tensor::zeros(&[rows, cols]);
        for j in 0..cols {
            t.data_mut()[(offset + j) * cols + j] = 1.0;
        }
        t
    }
}

impl LatentGenerator for ClusterGenerator {
    fn latent_dim(&self) -> usize {
        self.num_clusters() + self.shape[0]
    }

    fn sample_shape(&self) -> &[usize] {
        &self.shape
    }

    fn generate_on(&self, g: &mut Graph, z: Var) -> Result<Var> {
        let (c, d) = (self.num_clusters(), self.shape[0]);
        let n = c + d;
        let zs = g.value(z).shape();
        if zs.len() != 2 || zs[1] != n {
            return Err(DissectError::Incompatible(format!("latent batch must be [S, {n}], got {zs:?}")));
        }
        let pick_mix = g.constant(Self::selector(n, 0, c));
        let pick_noise = g.constant(Self::selector(n, c, d));
        let centers = g.constant(self.pre_centers.clone());
        let mix = g.matmul(z, pick_mix)?;
        let mix = g.scale(mix, self.sharpness);
        let weights = g.softmax(mix)?;
        let mean = g.matmul(weights, centers)?;
        let noise = g.matmul(z, pick_noise)?;
        let noise = g.scale(noise, self.sigma);
        let pre = g.add(mean, noise)?;
        Ok(g.tanh(pre))
    }

    fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in self.pre_centers.data().iter().chain([&self.sharpness, &self.sigma]) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
