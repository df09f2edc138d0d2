use std::path::Path;

use super::{DissectError, PatternResult, Result};
use crate::tensor::Tensor;

fn to_byte(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// Writes a `[1, h, w]` pattern as binary PGM or a `[3, h, w]` one as PPM,
/// mapping `[-1, 1]` to `0..=255`.
pub fn write_pnm(path: impl AsRef<Path>, image: &Tensor) -> Result<()> {
    let (c, h, w) = match *image.shape() {
        [c @ (1 | 3), h, w] => (c, h, w),
        _ => {
            return Err(DissectError::Config(format!(
                "images need shape [1 or 3, h, w], got {:?}",
                image.shape()
            )))
        }
    };
    let mut out = format!("{}\n{w} {h}\n255\n", if c == 1 { "P5" } else { "P6" }).into_bytes();
    let d = image.data();
    for i in 0..h * w {
        for ch in 0..c {
            out.push(to_byte(d[ch * h * w + i]));
        }
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|source| DissectError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per pattern: `class,seed,x0,x1,...`.
pub fn patterns_to_csv(patterns: &[PatternResult]) -> String {
    let width = patterns.first().map_or(0, |p| p.x_star.len());
    let mut out = String::from("class,seed");
    for i in 0..width {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for p in patterns {
        out.push_str(&format!("{},{}", p.class, p.seed));
        for v in p.x_star.data() {
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pgm");
        write_pnm(&path, &Tensor::new(vec![1, 1, 3], vec![-1.0, 0.0, 1.0]).unwrap()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, b"P5\n3 1\n255\n\x00\x80\xff");
    }

    #[test]
    fn ppm_interleaves_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.ppm");
        write_pnm(&path, &Tensor::new(vec![3, 1, 1], vec![1.0, -1.0, 1.0]).unwrap()).unwrap();
        assert!(std::fs::read(&path).unwrap().ends_with(b"\xff\x00\xff"));
        assert!(write_pnm(&path, &Tensor::zeros(&[16])).is_err());
    }

    #[test]
    fn csv_rows() {
        let p = PatternResult {
            class: 2,
            seed: 7,
            z_init: Tensor::zeros(&[1]),
            z_star: Tensor::zeros(&[1]),
            x_star: Tensor::vector(vec![0.5, -1.0]),
            objective_trace: vec![],
        };
        assert_eq!(patterns_to_csv(&[p]), "class,seed,x0,x1\n2,7,5e-1,-1e0\n");
    }
}
