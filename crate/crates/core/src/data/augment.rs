use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Result};
use crate::rng;
use crate::tensor::Tensor;

/// Zero-pad, random crop and optional horizontal flip for `[n, c, h, w]` batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub pad_pixels: usize,
    pub crop_size: (usize, usize),
    pub horizontal_flip: bool,
    pub enabled: bool,
}

impl AugmentationPolicy {
    pub fn disabled() -> Self {
        AugmentationPolicy {
            pad_pixels: 0,
            crop_size: (0, 0),
            horizontal_flip: false,
            enabled: false,
        }
    }

    /// The usual CIFAR recipe: 4-pixel padding, 32x32 crops, flips.
    pub fn cifar_standard() -> Self {
        AugmentationPolicy {
            pad_pixels: 4,
            crop_size: (32, 32),
            horizontal_flip: true,
            enabled: true,
        }
    }
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self::disabled()
    }
}

/// Each image gets its own crop offset and flip draw, consumed in batch order.
pub fn augment(batch: &Tensor, policy: &AugmentationPolicy, seed: u64) -> Result<Tensor> {
    if !policy.enabled {
        return Ok(batch.clone());
    }
    let &[n, c, h, w] = batch.shape() else {
        return Err(DataError::Invalid(format!(
            "augmentation needs [n, c, h, w] images, got {:?}",
            batch.shape()
        )));
    };
    let (ch, cw) = policy.crop_size;
    let (ph, pw) = (h + 2 * policy.pad_pixels, w + 2 * policy.pad_pixels);
    if ch == 0 || cw == 0 || ch > ph || cw > pw {
        return Err(DataError::Invalid(format!(
            "crop {ch}x{cw} does not fit padded image {ph}x{pw}"
        )));
    }
    let pad = policy.pad_pixels as isize;
    let mut r = rng::stream(seed, rng::AUGMENT);
    let src = batch.data();
    let mut out = Vec::with_capacity(n * c * ch * cw);
    for img in 0..n {
        let oy = r.random_range(0..=ph - ch) as isize - pad;
        let ox = r.random_range(0..=pw - cw) as isize - pad;
        let flip = policy.horizontal_flip && r.random_bool(0.5);
        for chan in 0..c {
            let base = (img * c + chan) * h * w;
            for y in 0..ch as isize {
                for x in 0..cw as isize {
                    let sx = if flip { cw as isize - 1 - x } else { x };
                    let (iy, ix) = (oy + y, ox + sx);
                    let v = if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                        src[base + iy as usize * w + ix as usize]
                    } else {
                        0.0
                    };
                    out.push(v);
                }
            }
        }
    }
    Tensor::new(vec![n, c, ch, cw], out).map_err(|e| DataError::Invalid(e.to_string()))
}
