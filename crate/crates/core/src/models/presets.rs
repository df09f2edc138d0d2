use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ArchitectureDescriptor, LayerSpec, ModelError, Result, Role};

/// Named desk-scale architectures.
///
/// `mlp-small` and `cnn-small` are two classifier sizes, `mlp-alt` a
/// deeper classifier with different widths, and `gen-small`/`disc-small` a
/// GAN pair. Image-shaped data (`[c, h, w]`) gets convolutional variants of
/// the GAN pair; flat data gets dense ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    MlpSmall,
    MlpAlt,
    CnnSmall,
    GenSmall,
    DiscSmall,
}

pub const DEFAULT_LATENT_DIM: usize = 100;

/// Inputs shared by every preset; fields irrelevant to a role are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetParams {
    /// Shape of one data sample.
    pub data_shape: Vec<usize>,
    pub num_classes: usize,
    pub latent_dim: usize,
    /// Overrides the preset's hidden width.
    pub hidden: Option<usize>,
    pub init_seed: u64,
}

impl PresetParams {
    pub fn new(data_shape: &[usize], num_classes: usize, init_seed: u64) -> Self {
        PresetParams {
            data_shape: data_shape.to_vec(),
            num_classes,
            latent_dim: DEFAULT_LATENT_DIM,
            hidden: None,
            init_seed,
        }
    }
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::MlpSmall,
        Preset::MlpAlt,
        Preset::CnnSmall,
        Preset::GenSmall,
        Preset::DiscSmall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MlpSmall => "mlp-small",
            Preset::MlpAlt => "mlp-alt",
            Preset::CnnSmall => "cnn-small",
            Preset::GenSmall => "gen-small",
            Preset::DiscSmall => "disc-small",
        }
    }

    pub fn role(self) -> Role {
        match self {
            Preset::GenSmall => Role::Generator,
            Preset::DiscSmall => Role::Discriminator,
            _ => Role::Classifier,
        }
    }

    pub fn descriptor(self, p: &PresetParams) -> Result<ArchitectureDescriptor> {
        let flat: usize = p.data_shape.iter().product();
        let image = match *p.data_shape.as_slice() {
            [c, h, w] => Some((c, h, w)),
            _ => None,
        };
        let mut layers = Vec::new();
        if p.data_shape.len() > 1 && self.role() != Role::Generator && self != Preset::CnnSmall {
            layers.push(LayerSpec::Flatten);
        }
        let dense = |input, output| LayerSpec::Dense { input, output };
        let mut input_shape = p.data_shape.clone();
        match self {
            Preset::MlpSmall => {
                let h = p.hidden.unwrap_or(64);
                layers.extend([dense(flat, h), LayerSpec::Relu, dense(h, p.num_classes)]);
            }
            Preset::MlpAlt => {
                let h = p.hidden.unwrap_or(96);
                let h2 = (h / 2).max(1);
                layers.extend([
                    dense(flat, h),
                    LayerSpec::Relu,
                    dense(h, h2),
                    LayerSpec::Relu,
                    dense(h2, p.num_classes),
                ]);
            }
            Preset::CnnSmall => {
                let (c, h, w) = image.ok_or_else(|| needs_image(self, &p.data_shape))?;
                let hidden = p.hidden.unwrap_or(32);
                let (h2, w2) = ((h + 1) / 2, (w + 1) / 2);
                layers.extend([
                    LayerSpec::Conv {
                        in_ch: c,
                        out_ch: 8,
                        kernel: 3,
                        stride: 1,
                        pad: 1,
                    },
                    LayerSpec::Relu,
                    LayerSpec::Conv {
                        in_ch: 8,
                        out_ch: 16,
                        kernel: 3,
                        stride: 2,
                        pad: 1,
                    },
                    LayerSpec::Relu,
                    LayerSpec::Flatten,
                    dense(16 * h2 * w2, hidden),
                    LayerSpec::Relu,
                    dense(hidden, p.num_classes),
                ]);
            }
            Preset::GenSmall => {
                input_shape = vec![p.latent_dim];
                match image {
                    Some((c, h, w)) if h % 4 == 0 && w % 4 == 0 => {
                        let base = p.hidden.unwrap_or(32);
                        layers.extend([
                            dense(p.latent_dim, base * (h / 4) * (w / 4)),
                            LayerSpec::Relu,
                            LayerSpec::Reshape {
                                shape: vec![base, h / 4, w / 4],
                            },
                            LayerSpec::Tconv {
                                in_ch: base,
                                out_ch: base / 2,
                                kernel: 4,
                                stride: 2,
                                pad: 1,
                            },
                            LayerSpec::Relu,
                            LayerSpec::Tconv {
                                in_ch: base / 2,
                                out_ch: c,
                                kernel: 4,
                                stride: 2,
                                pad: 1,
                            },
                        ]);
                    }
                    Some(_) => return Err(needs_image(self, &p.data_shape)),
                    None => {
                        let h = p.hidden.unwrap_or(32);
                        layers.extend([
                            dense(p.latent_dim, h),
                            LayerSpec::Relu,
                            dense(h, h),
                            LayerSpec::Relu,
                            dense(h, flat),
                        ]);
                        if p.data_shape.len() > 1 {
                            layers.push(LayerSpec::Reshape {
                                shape: p.data_shape.clone(),
                            });
                        }
                    }
                }
                layers.push(LayerSpec::Tanh);
            }
            Preset::DiscSmall => match image {
                Some((c, h, w)) if h % 4 == 0 && w % 4 == 0 => {
                    layers.clear();
                    layers.extend([
                        LayerSpec::Conv {
                            in_ch: c,
                            out_ch: 16,
                            kernel: 4,
                            stride: 2,
                            pad: 1,
                        },
                        LayerSpec::Relu,
                        LayerSpec::Conv {
                            in_ch: 16,
                            out_ch: 32,
                            kernel: 4,
                            stride: 2,
                            pad: 1,
                        },
                        LayerSpec::Relu,
                        LayerSpec::Flatten,
                        dense(32 * (h / 4) * (w / 4), 1),
                    ]);
                }
                _ => {
                    let h = p.hidden.unwrap_or(32);
                    layers.extend([dense(flat, h), LayerSpec::Relu, dense(h, h), LayerSpec::Relu, dense(h, 1)]);
                }
            },
        }
        let role = self.role();
        let d = ArchitectureDescriptor {
            role,
            input_shape,
            num_classes: (role == Role::Classifier).then_some(p.num_classes),
            latent_dim: (role == Role::Generator).then_some(p.latent_dim),
            init_seed: p.init_seed,
            layers,
        };
        d.validate()?;
        Ok(d)
    }
}

fn needs_image(preset: Preset, shape: &[usize]) -> ModelError {
    ModelError::InvalidDescriptor(format!(
        "{} needs [channels, height, width] data with sides divisible by 4 (or any image for cnn-small), got {shape:?}",
        preset.name()
    ))
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Network;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("vgg11".parse::<Preset>().is_err());
    }

    #[test]
    fn classifier_presets_build_for_flat_data() {
        let params = PresetParams::new(&[16], 10, 3);
        for p in [Preset::MlpSmall, Preset::MlpAlt] {
            let net = Network::build(p.descriptor(&params).unwrap()).unwrap();
            assert_eq!(net.output_shape(), &[10]);
        }
        assert!(Preset::CnnSmall.descriptor(&params).is_err());
    }

    #[test]
    fn image_presets_build() {
        let mut params = PresetParams::new(&[1, 8, 8], 10, 3);
        params.latent_dim = 16;
        for p in Preset::ALL {
            let d = p.descriptor(&params).unwrap();
            let net = Network::build(d).unwrap();
            match p.role() {
                Role::Generator => assert_eq!(net.output_shape(), &[1, 8, 8]),
                Role::Discriminator => assert_eq!(net.output_shape(), &[1]),
                Role::Classifier => assert_eq!(net.output_shape(), &[10]),
            }
        }
    }

    #[test]
    fn hidden_width_override() {
        let mut params = PresetParams::new(&[16], 10, 0);
        params.hidden = Some(1000);
        let d = Preset::MlpSmall.descriptor(&params).unwrap();
        assert_eq!(d.layers[0], LayerSpec::Dense { input: 16, output: 1000 });
    }
}
