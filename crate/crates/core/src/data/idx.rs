use std::path::Path;

use super::{read_file, scale_byte, DataError, LabeledDataset, Result};
use crate::tensor::Tensor;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Header {
    dims: Vec<usize>,
    body_offset: usize,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DataError::TruncatedHeader {
            offset,
            needed: 4,
            len: bytes.len(),
        })
}

fn parse_header(bytes: &[u8], magic: u32) -> Result<Header> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(DataError::BadMagic { expected: magic, found });
    }
    // the low byte of the magic is the dimension count
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank)
        .map(|i| read_u32(bytes, 4 + 4 * i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(Header {
        dims,
        body_offset: 4 + 4 * rank,
    })
}

fn body<'a>(bytes: &'a [u8], header: &Header) -> Result<&'a [u8]> {
    let needed: usize = header.dims.iter().product();
    bytes
        .get(header.body_offset..header.body_offset + needed)
        .ok_or(DataError::TruncatedData {
            offset: header.body_offset,
            needed,
            len: bytes.len(),
        })
}

/// Parses an IDX image/label pair already in memory.
pub(crate) fn parse_idx(images: &[u8], labels: &[u8]) -> Result<LabeledDataset> {
    let ih = parse_header(images, IDX_IMAGES_MAGIC)?;
    let lh = parse_header(labels, IDX_LABELS_MAGIC)?;
    let (n, rows, cols) = (ih.dims[0], ih.dims[1], ih.dims[2]);
    if n != lh.dims[0] {
        return Err(DataError::CountMismatch {
            images: n,
            labels: lh.dims[0],
        });
    }
    if n == 0 {
        return Err(DataError::Empty);
    }
    let pixels = body(images, &ih)?;
    let label_bytes = body(labels, &lh)?;
    let data = pixels.iter().map(|&b| scale_byte(b)).collect();
    let inputs = Tensor::new(vec![n, 1, rows, cols], data).map_err(|e| DataError::Invalid(e.to_string()))?;
    let labels: Vec<usize> = label_bytes.iter().map(|&b| b as usize).collect();
    let num_classes = labels.iter().max().map_or(1, |m| m + 1).max(2);
    LabeledDataset::new(inputs, labels, num_classes)
}

/// Loads an IDX image file (`0x00000803`) and its label file (`0x00000801`).
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledDataset> {
    let ib = read_file(images.as_ref())?;
    let lb = read_file(labels.as_ref())?;
    parse_idx(&ib, &lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images_fixture() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 255, 255, 0, 255, 255, 0, 0]);
        b
    }

    fn labels_fixture() -> Vec<u8> {
        vec![0, 0, 8, 1, 0, 0, 0, 2, 1, 0]
    }

    #[test]
    fn two_image_fixture_decodes() {
        let ds = parse_idx(&images_fixture(), &labels_fixture()).unwrap();
        assert_eq!(ds.inputs().shape(), &[2, 1, 2, 2]);
        assert_eq!(ds.inputs().data(), &[-1., 1., 1., -1., 1., 1., -1., -1.]);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn empty_file_is_truncated_header() {
        let err = parse_idx(&[], &labels_fixture()).unwrap_err();
        assert!(err.to_string().contains("truncated header"), "{err}");
    }

    #[test]
    fn image_magic_in_label_slot_is_bad_magic() {
        let err = parse_idx(&images_fixture(), &images_fixture()).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn truncated_pixels_report_offset() {
        let mut img = images_fixture();
        img.truncate(20);
        let err = parse_idx(&img, &labels_fixture()).unwrap_err();
        assert!(matches!(err, DataError::TruncatedData { offset: 16, needed: 8, len: 20 }));
    }

    #[test]
    fn count_mismatch_detected() {
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 3, 1, 0, 1];
        let err = parse_idx(&images_fixture(), &labels).unwrap_err();
        assert!(matches!(err, DataError::CountMismatch { images: 2, labels: 3 }));
    }
}
