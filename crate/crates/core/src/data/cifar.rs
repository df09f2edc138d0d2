use std::path::Path;

use super::{read_file, scale_byte, DataError, LabeledDataset, Result};
use crate::tensor::Tensor;

/// One label byte followed by 32x32 pixels for each of R, G, B.
pub const CIFAR_RECORD_LEN: usize = 1 + 3 * 32 * 32;

pub(crate) fn parse_cifar10(bytes: &[u8]) -> Result<LabeledDataset> {
    if bytes.is_empty() {
        return Err(DataError::Empty);
    }
    if bytes.len() % CIFAR_RECORD_LEN != 0 {
        return Err(DataError::RecordLength {
            len: bytes.len(),
            record: CIFAR_RECORD_LEN,
        });
    }
    let n = bytes.len() / CIFAR_RECORD_LEN;
    let mut labels = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * (CIFAR_RECORD_LEN - 1));
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD_LEN).enumerate() {
        if rec[0] >= 10 {
            return Err(DataError::Invalid(format!(
                "record {i} at offset {}: label {} out of range",
                i * CIFAR_RECORD_LEN,
                rec[0]
            )));
        }
        labels.push(rec[0] as usize);
        data.extend(rec[1..].iter().map(|&b| scale_byte(b)));
    }
    let inputs = Tensor::new(vec![n, 3, 32, 32], data).map_err(|e| DataError::Invalid(e.to_string()))?;
    LabeledDataset::new(inputs, labels, 10)
}

/// Loads a CIFAR-10 binary batch file.
pub fn load_cifar10_binary(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    parse_cifar10(&read_file(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_white_record() {
        let mut rec = vec![255u8; CIFAR_RECORD_LEN];
        rec[0] = 7;
        let ds = parse_cifar10(&rec).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.labels(), &[7]);
        assert_eq!(ds.inputs().shape(), &[1, 3, 32, 32]);
        assert!(ds.inputs().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_length_is_empty() {
        assert!(matches!(parse_cifar10(&[]), Err(DataError::Empty)));
    }

    #[test]
    fn two_records() {
        let ds = parse_cifar10(&vec![3u8; 2 * CIFAR_RECORD_LEN]).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn ragged_length_rejected() {
        assert!(matches!(
            parse_cifar10(&vec![0u8; CIFAR_RECORD_LEN + 5]),
            Err(DataError::RecordLength { .. })
        ));
    }

    #[test]
    fn channel_major_layout() {
        let mut rec = vec![0u8; CIFAR_RECORD_LEN];
        // first green pixel sits right after the 1024 red ones
        rec[1 + 1024] = 255;
        let ds = parse_cifar10(&rec).unwrap();
        let d = ds.inputs().data();
        assert_eq!(d[1023], -1.0);
        assert_eq!(d[1024], 1.0);
    }
}
