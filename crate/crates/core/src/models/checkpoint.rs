//! Binary layout, all integers little-endian:
//!
//! ```text
//! "NNCK" | version: u32 | len: u32 | descriptor text (UTF-8, len bytes)
//! per parameter, in descriptor order:
//!     rank: u32 | dims: rank x u32 | values: f32 x product(dims)
//! ```
//!
//! Values are narrowed to `f32`, so a round trip perturbs outputs slightly.

use std::path::Path;

use super::{ArchitectureDescriptor, ModelError, Network, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"NNCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(net: &Network) -> Vec<u8> {
    let text = net.descriptor().to_text();
    let mut out = Vec::with_capacity(12 + text.len() + 4 * net.parameter_count());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    for p in net.params() {
        out.extend_from_slice(&(p.rank() as u32).to_le_bytes());
        for &d in p.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in p.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let slice = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or(ModelError::Truncated(what, self.pos))?;
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(ModelError::BadMagic([magic[0], magic[1], magic[2], magic[3]]));
    }
    let version = r.u32("header")?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let len = r.u32("header")? as usize;
    let text = std::str::from_utf8(r.take(len, "descriptor")?)
        .map_err(|e| ModelError::InvalidDescriptor(format!("descriptor is not UTF-8: {e}")))?;
    let descriptor = ArchitectureDescriptor::from_text(text)?;

    let count = descriptor.layers.iter().map(|l| l.param_shapes().len()).sum::<usize>();
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = r.u32("tensor block")? as usize;
        let dims = (0..rank)
            .map(|_| r.u32("tensor block").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let raw = r.take(4 * n, "tensor block")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        params.push(Tensor::new(dims, data)?);
    }
    if r.pos != bytes.len() {
        return Err(ModelError::InvalidDescriptor(format!(
            "{} trailing bytes after the last tensor block",
            bytes.len() - r.pos
        )));
    }
    Network::from_parts(descriptor, params)
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(net)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&bytes)
}
