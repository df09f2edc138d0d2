use rand::seq::SliceRandom;
use rand::Rng;

use super::{DataError, LabelProvenance, LabeledDataset, Result};
use crate::rng;

/// Redraws the labels of exactly `round(p * n)` seeded samples uniformly over
/// all classes (a redraw may land on the original label).
///
/// For a fixed seed the affected subsets are nested: the samples touched at
/// noise level `p1` are a prefix of those touched at `p2 > p1`, and they
/// receive the same replacement labels.
pub fn randomize_labels(dataset: &LabeledDataset, noise_level: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&noise_level) {
        return Err(DataError::Invalid(format!("noise level {noise_level} outside [0, 1]")));
    }
    let n = dataset.len();
    let k = (noise_level * n as f64).round() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::NOISE_SUBSET));
    let mut label_rng = rng::stream(seed, rng::NOISE_LABELS);
    let replacements: Vec<usize> = (0..n)
        .map(|_| label_rng.random_range(0..dataset.num_classes()))
        .collect();

    let mut labels = dataset.labels().to_vec();
    for (&idx, &label) in order.iter().zip(&replacements).take(k) {
        labels[idx] = label;
    }
    Ok(dataset.with_labels(labels, LabelProvenance::Randomized { noise_level, seed }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn dataset(n: usize, classes: usize) -> LabeledDataset {
        LabeledDataset::new(Tensor::zeros(&[n, 1]), (0..n).map(|i| i % classes).collect(), classes).unwrap()
    }

    fn differing(a: &LabeledDataset, b: &LabeledDataset) -> usize {
        a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn zero_noise_is_identity() {
        let ds = dataset(100, 10);
        let noisy = randomize_labels(&ds, 0.0, 3).unwrap();
        assert_eq!(noisy.labels(), ds.labels());
        assert_eq!(noisy.provenance(), LabelProvenance::Randomized { noise_level: 0.0, seed: 3 });
    }

    #[test]
    fn pure_function_of_arguments() {
        let ds = dataset(500, 10);
        assert_eq!(randomize_labels(&ds, 0.4, 9).unwrap(), randomize_labels(&ds, 0.4, 9).unwrap());
        assert_eq!(ds.provenance(), LabelProvenance::True);
    }

    #[test]
    fn full_noise_fraction() {
        let ds = dataset(10_000, 10);
        let f = differing(&ds, &randomize_labels(&ds, 1.0, 1).unwrap()) as f64 / 1e4;
        assert!((f - 0.9).abs() < 0.01, "{f}");
    }

    #[test]
    fn half_noise_fraction() {
        let ds = dataset(10_000, 10);
        let f = differing(&ds, &randomize_labels(&ds, 0.5, 2).unwrap()) as f64 / 1e4;
        assert!((f - 0.45).abs() < 0.02, "{f}");
    }

    #[test]
    fn subsets_nest_across_noise_levels() {
        let ds = dataset(1000, 10);
        let low = randomize_labels(&ds, 0.3, 5).unwrap();
        let high = randomize_labels(&ds, 0.7, 5).unwrap();
        for i in 0..ds.len() {
            if low.labels()[i] != ds.labels()[i] {
                assert_eq!(low.labels()[i], high.labels()[i]);
            }
        }
        assert!(differing(&ds, &low) <= differing(&ds, &high));
    }

    #[test]
    fn out_of_range_level_rejected() {
        assert!(randomize_labels(&dataset(10, 2), 1.5, 0).is_err());
    }
}
