use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Classifier,
    Generator,
    Discriminator,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Classifier => "classifier",
            Role::Generator => "generator",
            Role::Discriminator => "discriminator",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
    },
    Conv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Tconv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Relu,
    Tanh,
    Sigmoid,
    Flatten,
    Reshape {
        shape: Vec<usize>,
    },
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Dense { input, output } => write!(f, "dense {input}->{output}"),
            LayerSpec::Conv {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
            } => write!(f, "conv {in_ch}->{out_ch} k{kernel} s{stride} p{pad}"),
            LayerSpec::Tconv {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
            } => write!(f, "tconv {in_ch}->{out_ch} k{kernel} s{stride} p{pad}"),
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::Tanh => f.write_str("tanh"),
            LayerSpec::Sigmoid => f.write_str("sigmoid"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Reshape { shape } => write!(f, "reshape {shape:?}"),
        }
    }
}

impl LayerSpec {
    /// Shape of one sample after this layer, or `None` if `input` does not fit.
    pub fn output_shape(&self, input: &[usize]) -> Option<Vec<usize>> {
        match self {
            LayerSpec::Dense { input: i, output } => (input == [*i]).then(|| vec![*output]),
            LayerSpec::Conv {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
            } => match *input {
                [c, h, w] if c == *in_ch && *stride > 0 && h + 2 * pad >= *kernel && w + 2 * pad >= *kernel => Some(vec![
                    *out_ch,
                    (h + 2 * pad - kernel) / stride + 1,
                    (w + 2 * pad - kernel) / stride + 1,
                ]),
                _ => None,
            },
            LayerSpec::Tconv {
                in_ch,
                out_ch,
                kernel,
                stride,
                pad,
            } => match *input {
                [c, h, w] if c == *in_ch && *stride > 0 => {
                    let oh = ((h - 1) * stride + kernel).checked_sub(2 * pad)?;
                    let ow = ((w - 1) * stride + kernel).checked_sub(2 * pad)?;
                    (oh > 0 && ow > 0).then(|| vec![*out_ch, oh, ow])
                }
                _ => None,
            },
            LayerSpec::Relu | LayerSpec::Tanh | LayerSpec::Sigmoid => Some(input.to_vec()),
            LayerSpec::Flatten => Some(vec![input.iter().product()]),
            LayerSpec::Reshape { shape } => {
                (shape.iter().product::<usize>() == input.iter().product::<usize>() && !shape.contains(&0))
                    .then(|| shape.clone())
            }
        }
    }

    /// Shapes of this layer's parameters (weight, bias), if any.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { input, output } => vec![vec![output, input], vec![output]],
            LayerSpec::Conv {
                in_ch, out_ch, kernel, ..
            } => vec![vec![out_ch, in_ch, kernel, kernel], vec![out_ch]],
            LayerSpec::Tconv {
                in_ch, out_ch, kernel, ..
            } => vec![vec![in_ch, out_ch, kernel, kernel], vec![out_ch]],
            _ => Vec::new(),
        }
    }

    /// Fan-in used to scale the uniform initialization.
    pub(crate) fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { input, .. } => input,
            LayerSpec::Conv { in_ch, kernel, .. } => in_ch * kernel * kernel,
            LayerSpec::Tconv { out_ch, kernel, .. } => out_ch * kernel * kernel,
            _ => 1,
        }
    }
}

/// Everything needed to rebuild a network from scratch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureDescriptor {
    pub role: Role,
    /// Shape of one input sample; `[latent_dim]` for generators.
    pub input_shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent_dim: Option<usize>,
    pub init_seed: u64,
    pub layers: Vec<LayerSpec>,
}

impl ArchitectureDescriptor {
    /// Checks layer compatibility and role constraints, returning the
    /// per-sample output shape.
    pub fn validate(&self) -> Result<Vec<usize>> {
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(ModelError::InvalidDescriptor(format!(
                "input shape {:?} must be non-empty with positive sizes",
                self.input_shape
            )));
        }
        if self.layers.is_empty() {
            return Err(ModelError::InvalidDescriptor("no layers".into()));
        }
        let mut shape = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.output_shape(&shape).ok_or_else(|| ModelError::IncompatibleLayers {
                index: i,
                previous: if i == 0 {
                    format!("input {:?}", self.input_shape)
                } else {
                    self.layers[i - 1].to_string()
                },
                layer: layer.to_string(),
                shape: shape.clone(),
            })?;
        }

        let last = self.layers.last().expect("non-empty");
        match self.role {
            Role::Classifier => {
                let classes = self
                    .num_classes
                    .ok_or_else(|| ModelError::InvalidDescriptor("classifier needs num_classes".into()))?;
                if classes < 2 || !matches!(last, LayerSpec::Dense { output, .. } if *output == classes) {
                    return Err(ModelError::InvalidDescriptor(format!(
                        "classifier must end in a dense layer with {classes} outputs, ends in {last}"
                    )));
                }
            }
            Role::Generator => {
                let latent = self
                    .latent_dim
                    .ok_or_else(|| ModelError::InvalidDescriptor("generator needs latent_dim".into()))?;
                if self.input_shape != [latent] {
                    return Err(ModelError::InvalidDescriptor(format!(
                        "generator input {:?} does not match latent_dim {latent}",
                        self.input_shape
                    )));
                }
                if *last != LayerSpec::Tanh {
                    return Err(ModelError::InvalidDescriptor(format!(
                        "generator must end in tanh, ends in {last}"
                    )));
                }
            }
            Role::Discriminator => {
                if shape != [1] {
                    return Err(ModelError::InvalidDescriptor(format!(
                        "discriminator must produce one logit, produces {shape:?}"
                    )));
                }
            }
        }
        Ok(shape)
    }

    /// Canonical text form, stored verbatim in checkpoints.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ModelError::InvalidDescriptor(e.to_string()))
    }
}
