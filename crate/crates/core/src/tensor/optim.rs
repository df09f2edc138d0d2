use serde::{Deserialize, Serialize};

use super::{Result, Tensor, TensorError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerKind::SgdMomentum { lr, .. } | OptimizerKind::Adam { lr, .. } => lr,
        }
    }
}

/// Update rule plus its per-parameter buffers.
///
/// With weight decay `λ > 0` the term `λ·θ` is added to each gradient
/// before the update.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    weight_decay: f64,
    // velocity for SGD; first moment for Adam
    first: Vec<Vec<f64>>,
    // second moment (Adam only)
    second: Vec<Vec<f64>>,
    shapes: Vec<Vec<usize>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, weight_decay: f64, params: &[Tensor]) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.len()]).collect::<Vec<_>>();
        let second = match kind {
            OptimizerKind::Adam { .. } => zeros(),
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
        };
        Optimizer {
            kind,
            weight_decay,
            first: zeros(),
            second,
            shapes: params.iter().map(|p| p.shape().to_vec()).collect(),
            steps: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.shapes.len() || grads.len() != params.len() {
            return Err(TensorError::Invalid {
                op: "optimizer_step",
                msg: format!(
                    "expected {} parameters, got {} parameters and {} gradients",
                    self.shapes.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        for ((p, g), shape) in params.iter().zip(grads).zip(&self.shapes) {
            if p.shape() != shape.as_slice() || g.shape() != shape.as_slice() {
                return Err(TensorError::ShapeMismatch {
                    op: "optimizer_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
        }
        self.steps += 1;
        let decay = self.weight_decay;
        match self.kind {
            OptimizerKind::SgdMomentum { lr, momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((theta, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
                        let grad = gi + decay * *theta;
                        *vi = momentum * *vi + grad;
                        *theta -= lr * *vi;
                    }
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((theta, &gi), mi), vi) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        let grad = gi + decay * *theta;
                        *mi = beta1 * *mi + (1.0 - beta1) * grad;
                        *vi = beta2 * *vi + (1.0 - beta2) * grad * grad;
                        let m_hat = *mi / c1;
                        let v_hat = *vi / c2;
                        *theta -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
