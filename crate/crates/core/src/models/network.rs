use rand::Rng;
use sha2::{Digest, Sha256};

use super::{ArchitectureDescriptor, LayerSpec, ModelError, Result, Role};
use crate::rng;
use crate::tensor::{Graph, Tensor, Var};

/// A layer stack with its parameters, in descriptor order (weight then bias
/// for each parametrized layer).
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    descriptor: ArchitectureDescriptor,
    output_shape: Vec<usize>,
    params: Vec<Tensor>,
}

impl Network {
    /// Validates the descriptor and draws every parameter uniformly from
    /// `±1/sqrt(fan_in)` using the descriptor's `init_seed`.
    pub fn build(descriptor: ArchitectureDescriptor) -> Result<Self> {
        let output_shape = descriptor.validate()?;
        let mut r = rng::stream(descriptor.init_seed, rng::INIT);
        let mut params = Vec::new();
        for layer in &descriptor.layers {
            let bound = 1.0 / (layer.fan_in() as f64).sqrt();
            for shape in layer.param_shapes() {
                let n = shape.iter().product();
                let data = (0..n).map(|_| r.random_range(-bound..bound)).collect();
                params.push(Tensor::new(shape, data)?);
            }
        }
        Ok(Network {
            descriptor,
            output_shape,
            params,
        })
    }

    /// Reassembles a network from a descriptor and existing parameters.
    pub fn from_parts(descriptor: ArchitectureDescriptor, params: Vec<Tensor>) -> Result<Self> {
        let output_shape = descriptor.validate()?;
        let expected: Vec<Vec<usize>> = descriptor.layers.iter().flat_map(LayerSpec::param_shapes).collect();
        if expected.len() != params.len() {
            return Err(ModelError::InvalidDescriptor(format!(
                "descriptor declares {} parameter tensors, got {}",
                expected.len(),
                params.len()
            )));
        }
        for (i, (want, p)) in expected.iter().zip(&params).enumerate() {
            if want.as_slice() != p.shape() {
                return Err(ModelError::InvalidDescriptor(format!(
                    "parameter {i} has shape {:?}, descriptor expects {want:?}",
                    p.shape()
                )));
            }
        }
        Ok(Network {
            descriptor,
            output_shape,
            params,
        })
    }

    pub fn descriptor(&self) -> &ArchitectureDescriptor {
        &self.descriptor
    }

    pub fn role(&self) -> Role {
        self.descriptor.role
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.descriptor.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable parameter access for optimizers. Shapes must be preserved.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.descriptor.num_classes
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// SHA-256 over all parameter bits, for detecting mutation.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            for v in p.data() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Registers the parameters as leaves of `g`.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params.iter().map(|p| g.leaf(p.clone(), trainable)).collect()
    }

    /// Runs the layer stack on a batch `x` of shape `[b, ...input_shape]`.
    pub fn forward(&self, g: &mut Graph, x: Var, params: &[Var]) -> Result<Var> {
        let shape = g.value(x).shape();
        if shape.len() != self.input_shape().len() + 1 || &shape[1..] != self.input_shape() {
            return Err(ModelError::InputShape {
                expected: self.input_shape().to_vec(),
                got: shape.to_vec(),
            });
        }
        let batch = shape[0];
        let mut h = x;
        let mut p = params.iter().copied();
        let mut next = || p.next().ok_or_else(|| ModelError::InvalidDescriptor("missing parameters".into()));
        for layer in &self.descriptor.layers {
            h = match layer {
                LayerSpec::Dense { .. } => {
                    let (w, b) = (next()?, next()?);
                    let wt = g.transpose(w)?;
                    let y = g.matmul(h, wt)?;
                    g.add_bias(y, b)?
                }
                LayerSpec::Conv { stride, pad, .. } => {
                    let (w, b) = (next()?, next()?);
                    let y = g.conv2d(h, w, *stride, *pad)?;
                    g.add_bias(y, b)?
                }
                LayerSpec::Tconv { stride, pad, .. } => {
                    let (w, b) = (next()?, next()?);
                    let y = g.conv_transpose2d(h, w, *stride, *pad)?;
                    g.add_bias(y, b)?
                }
                LayerSpec::Relu => g.relu(h),
                LayerSpec::Tanh => g.tanh(h),
                LayerSpec::Sigmoid => g.sigmoid(h),
                LayerSpec::Flatten => g.flatten(h)?,
                LayerSpec::Reshape { shape } => {
                    let mut full = vec![batch];
                    full.extend_from_slice(shape);
                    g.reshape(h, &full)?
                }
            };
        }
        Ok(h)
    }

    /// Accepts a single sample or a batch; returns whether it was single.
    fn as_batch(&self, x: &Tensor) -> Result<(Tensor, bool)> {
        if x.shape() == self.input_shape() {
            let mut shape = vec![1];
            shape.extend_from_slice(x.shape());
            return Ok((x.clone().reshape(&shape)?, true));
        }
        if x.rank() == self.input_shape().len() + 1 && &x.shape()[1..] == self.input_shape() {
            return Ok((x.clone(), false));
        }
        Err(ModelError::InputShape {
            expected: self.input_shape().to_vec(),
            got: x.shape().to_vec(),
        })
    }

    /// Frozen forward pass; output keeps the batch axis only if `x` had one.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let (batch, single) = self.as_batch(x)?;
        let mut g = Graph::new();
        let xv = g.constant(batch);
        let params = self.bind(&mut g, false);
        let out = self.forward(&mut g, xv, &params)?;
        let out = g.value(out).clone();
        if single {
            Ok(out.reshape(&self.output_shape)?)
        } else {
            Ok(out)
        }
    }

    fn require(&self, role: Role) -> Result<()> {
        if self.role() != role {
            return Err(ModelError::WrongRole {
                expected: role,
                actual: self.role(),
            });
        }
        Ok(())
    }

    /// Raw class scores: `[C]` for one sample, `[b, C]` for a batch.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        self.require(Role::Classifier)?;
        self.infer(x)
    }

    /// Softmax of the logits, row by row.
    pub fn predict_probs(&self, x: &Tensor) -> Result<Tensor> {
        let logits = self.logits(x)?;
        let single = logits.rank() == 1;
        let c = *logits.shape().last().expect("logits have a class axis");
        let rows = logits.len() / c;
        let mut g = Graph::new();
        let l = g.constant(logits.reshape(&[rows, c])?);
        let p = g.softmax(l)?;
        let p = g.value(p).clone();
        Ok(if single { p.reshape(&[c])? } else { p })
    }

    /// Maps a latent vector (or a `[b, latent_dim]` batch) to data space.
    pub fn generate(&self, z: &Tensor) -> Result<Tensor> {
        self.require(Role::Generator)?;
        self.infer(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::finite_diff_check;

    fn dense_classifier(input: usize, hidden: usize, classes: usize, seed: u64) -> ArchitectureDescriptor {
        ArchitectureDescriptor {
            role: Role::Classifier,
            input_shape: vec![input],
            num_classes: Some(classes),
            latent_dim: None,
            init_seed: seed,
            layers: vec![
                LayerSpec::Dense { input, output: hidden },
                LayerSpec::Tanh,
                LayerSpec::Dense {
                    input: hidden,
                    output: classes,
                },
            ],
        }
    }

    fn zero_params(net: &mut Network) {
        for p in net.params_mut() {
            p.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    #[test]
    fn build_is_deterministic() {
        let a = Network::build(dense_classifier(4, 6, 3, 9)).unwrap();
        let b = Network::build(dense_classifier(4, 6, 3, 9)).unwrap();
        assert_eq!(a, b);
        let c = Network::build(dense_classifier(4, 6, 3, 10)).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn final_parameter_has_class_rows() {
        let net = Network::build(dense_classifier(4, 6, 10, 0)).unwrap();
        let n = net.params().len();
        assert_eq!(net.params()[n - 2].shape(), &[10, 6]);
        assert_eq!(net.params()[n - 1].shape(), &[10]);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let net = Network::build(dense_classifier(16, 8, 3, 1)).unwrap();
        assert!(net.params()[0].data().iter().all(|v| v.abs() < 0.25));
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let mut net = Network::build(dense_classifier(3, 4, 5, 0)).unwrap();
        zero_params(&mut net);
        let out = net.logits(&Tensor::vector(vec![1.0, -2.0, 0.5])).unwrap();
        assert_eq!(out, Tensor::zeros(&[5]));
        let p = net.predict_probs(&Tensor::vector(vec![1.0, -2.0, 0.5])).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn identity_dense_layer_passes_input_through() {
        let d = ArchitectureDescriptor {
            role: Role::Classifier,
            input_shape: vec![2],
            num_classes: Some(2),
            latent_dim: None,
            init_seed: 0,
            layers: vec![LayerSpec::Dense { input: 2, output: 2 }],
        };
        let net = Network::from_parts(d, vec![Tensor::new(vec![2, 2], vec![1., 0., 0., 1.]).unwrap(), Tensor::zeros(&[2])])
            .unwrap();
        assert_eq!(net.logits(&Tensor::vector(vec![1.0, 2.0])).unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn two_class_softmax_by_hand() {
        let d = ArchitectureDescriptor {
            role: Role::Classifier,
            input_shape: vec![1],
            num_classes: Some(2),
            latent_dim: None,
            init_seed: 0,
            layers: vec![LayerSpec::Dense { input: 1, output: 2 }],
        };
        let bias = Tensor::vector(vec![3f64.ln(), 0.0]);
        let net = Network::from_parts(d, vec![Tensor::zeros(&[2, 1]), bias]).unwrap();
        let p = net.predict_probs(&Tensor::vector(vec![0.0])).unwrap();
        assert!((p.data()[0] - 0.75).abs() < 1e-15 && (p.data()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn wrong_input_shape_rejected() {
        let net = Network::build(dense_classifier(3, 4, 5, 0)).unwrap();
        assert!(matches!(
            net.logits(&Tensor::zeros(&[4])),
            Err(ModelError::InputShape { .. })
        ));
    }

    #[test]
    fn logits_gradient_wrt_input_matches_finite_differences() {
        let net = Network::build(dense_classifier(3, 5, 4, 2)).unwrap();
        let x = Tensor::new(vec![2, 3], vec![0.3, -0.2, 0.9, -0.7, 0.1, 0.4]).unwrap();
        let report = finite_diff_check(
            |g, v| {
                let params = net.bind(g, false);
                let l = net.forward(g, v[0], &params)?;
                let w = g.constant(Tensor::new(vec![2, 4], vec![1., -2., 0.5, 3., 0.2, 0.1, -1., 2.]).unwrap());
                let prod = g.mul(l, w)?;
                Ok::<_, ModelError>(g.sum(prod))
            },
            &[x],
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn generator_role_enforced() {
        let net = Network::build(dense_classifier(3, 4, 5, 0)).unwrap();
        assert!(matches!(net.generate(&Tensor::zeros(&[3])), Err(ModelError::WrongRole { .. })));
    }
}
