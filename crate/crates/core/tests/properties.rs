use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memlab::data::{batches, randomize_labels, synth_clusters, LabeledDataset, SynthSpec};
use memlab::experiment::{ExperimentConfig, ExperimentKind};
use memlab::models::{decode_checkpoint, encode_checkpoint, Network, Preset, PresetParams};
use memlab::tensor::{finite_diff_check, Graph, Tensor, TensorError, Var};
use memlab::training::input_gradient_magnitude;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

#[derive(Clone, Copy, Debug)]
enum Unary {
    Tanh,
    Relu,
    Sigmoid,
    Abs,
    Softmax,
    LogSoftmax,
    Scale,
    SelfMul,
}

fn unary() -> impl Strategy<Value = Unary> {
    prop_oneof![
        Just(Unary::Tanh),
        Just(Unary::Relu),
        Just(Unary::Sigmoid),
        Just(Unary::Abs),
        Just(Unary::Softmax),
        Just(Unary::LogSoftmax),
        Just(Unary::Scale),
        Just(Unary::SelfMul),
    ]
}

fn apply(g: &mut Graph, op: Unary, h: Var) -> Result<Var, TensorError> {
    match op {
        Unary::Tanh => Ok(g.tanh(h)),
        Unary::Relu => Ok(g.relu(h)),
        Unary::Sigmoid => Ok(g.sigmoid(h)),
        Unary::Abs => Ok(g.abs(h)),
        Unary::Softmax => g.softmax(h),
        Unary::LogSoftmax => g.log_softmax(h),
        Unary::Scale => Ok(g.scale(h, -1.5)),
        Unary::SelfMul => g.mul(h, h),
    }
}

/// `x @ w + b`, a chain of unary ops, then a weighted sum or cross-entropy.
fn composition(ops: &[Unary], weights: &Tensor, labels: &[usize], g: &mut Graph, v: &[Var]) -> Result<Var, TensorError> {
    let mut h = g.matmul(v[0], v[1])?;
    h = g.add_bias(h, v[2])?;
    for &op in ops {
        h = apply(g, op, h)?;
    }
    if labels.is_empty() {
        let c = g.constant(weights.clone());
        let p = g.mul(h, c)?;
        Ok(g.sum(p))
    } else {
        g.cross_entropy(h, labels)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dense_compositions_match_finite_differences(
        seed in any::<u64>(),
        rows in 1usize..4,
        input in 1usize..5,
        width in 2usize..5,
        ops in prop::collection::vec(unary(), 0..4),
        entropy in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = vec![
            random_tensor(&mut rng, &[rows, input], 1.0),
            random_tensor(&mut rng, &[input, width], 1.0),
            random_tensor(&mut rng, &[width], 0.5),
        ];
        let weights = random_tensor(&mut rng, &[rows, width], 1.0);
        let labels: Vec<usize> = if entropy { (0..rows).map(|_| rng.random_range(0..width)).collect() } else { vec![] };
        let report = finite_diff_check(|g, v| composition(&ops, &weights, &labels, g, v), &point, 1e-5, 1e-6).unwrap();
        prop_assert!(report.passed, "{:?} {:?}", ops, report);
    }

    #[test]
    fn conv_pairs_match_finite_differences(
        seed in any::<u64>(),
        in_ch in 1usize..3,
        mid in 1usize..3,
        side in 3usize..6,
        stride in 1usize..3,
        pad in 0usize..2,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = vec![
            random_tensor(&mut rng, &[1, in_ch, side, side], 1.0),
            random_tensor(&mut rng, &[mid, in_ch, 3, 3], 0.5),
            random_tensor(&mut rng, &[mid, 2, 2, 2], 0.5),
        ];
        let out = (side + 2 * pad - 3) / stride + 1;
        let weights = random_tensor(&mut rng, &[2 * (2 * out) * (2 * out)], 1.0);
        let report = finite_diff_check(
            |g, v| {
                let h = g.conv2d(v[0], v[1], stride, pad)?;
                let h = g.tanh(h);
                let y = g.conv_transpose2d(h, v[2], 2, 0)?;
                let y = g.tanh(y);
                let c = g.constant(weights.clone().reshape(g.value(y).shape())?);
                let y = g.mul(y, c)?;
                Ok::<_, TensorError>(g.sum(y))
            },
            &point,
            1e-5,
            1e-6,
        )
        .unwrap();
        prop_assert!(report.passed, "{:?}", report);
    }

    #[test]
    fn backward_is_bitwise_repeatable(seed in any::<u64>(), ops in prop::collection::vec(unary(), 1..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = [random_tensor(&mut rng, &[3, 4], 1.0), random_tensor(&mut rng, &[4, 3], 1.0), random_tensor(&mut rng, &[3], 1.0)];
        let weights = random_tensor(&mut rng, &[3, 3], 1.0);
        let grads = || {
            let mut g = Graph::new();
            let v: Vec<Var> = point.iter().map(|t| g.leaf(t.clone(), true)).collect();
            let loss = composition(&ops, &weights, &[], &mut g, &v).unwrap();
            let gr = g.backward(loss).unwrap();
            v.iter().map(|&l| gr.get(l).unwrap().data().iter().map(|x| x.to_bits()).collect::<Vec<u64>>()).collect::<Vec<_>>()
        };
        prop_assert_eq!(grads(), grads());
    }

    #[test]
    fn softmax_rows_are_distributions(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..12, scale in 0.1f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::new();
        let x = g.leaf(random_tensor(&mut rng, &[rows, cols], scale), false);
        let s = g.softmax(x).unwrap();
        for row in g.value(s).data().chunks(cols) {
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn logit_and_probability_argmax_agree(seed in any::<u64>(), hidden in 2usize..16) {
        let mut p = PresetParams::new(&[5], 4, seed);
        p.hidden = Some(hidden);
        let net = Network::build(Preset::MlpSmall.descriptor(&p).unwrap()).unwrap();
        let x = random_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &[32, 5], 3.0);
        let (l, q) = (net.logits(&x).unwrap(), net.predict_probs(&x).unwrap());
        prop_assert_eq!(argmax(&l, 4), argmax(&q, 4));
    }

    #[test]
    fn build_depends_only_on_descriptor(seed in any::<u64>()) {
        let d = Preset::MlpAlt.descriptor(&PresetParams::new(&[3], 3, seed)).unwrap();
        prop_assert_eq!(Network::build(d.clone()).unwrap(), Network::build(d).unwrap());
    }

    #[test]
    fn epoch_batches_partition_indices(n in 1usize..60, batch in 1usize..20, seed in any::<u64>(), epoch in 0usize..5) {
        let data = LabeledDataset::new(Tensor::zeros(&[n, 1]), vec![0; n], 2).unwrap();
        let bs = batches(&data, batch, seed, epoch).unwrap();
        let mut seen: Vec<usize> = bs.iter().flat_map(|b| b.indices.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!(bs.iter().rev().skip(1).all(|b| b.indices.len() == batch));
    }

    #[test]
    fn label_noise_is_pure(p in 0.0f64..=1.0, seed in any::<u64>()) {
        let data = synth_clusters(&spec(4, 10, 3)).unwrap();
        let a = randomize_labels(&data, p, seed).unwrap();
        let b = randomize_labels(&data, p, seed).unwrap();
        prop_assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn gradient_magnitudes_are_non_negative(seed in any::<u64>()) {
        let net = Network::build(Preset::MlpSmall.descriptor(&PresetParams::new(&[6], 3, seed)).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_tensor(&mut rng, &[8, 6], 1.0);
        let labels: Vec<usize> = (0..8).map(|_| rng.random_range(0..3)).collect();
        prop_assert!(input_gradient_magnitude(&net, &x, &labels).unwrap().iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn config_hash_tracks_meaningful_fields(epochs in 1usize..500, other in 1usize..500, out in "[a-z]{1,8}") {
        let mut a = ExperimentConfig::new(ExperimentKind::Train);
        a.training.epochs = epochs;
        let mut moved = a.clone();
        moved.output_dir = Some(out.into());
        moved.workers = Some(3);
        prop_assert_eq!(a.config_hash(), moved.config_hash());
        let mut b = a.clone();
        b.training.epochs = other;
        prop_assert_eq!(a.config_hash() == b.config_hash(), epochs == other);
    }
}

fn argmax(t: &Tensor, cols: usize) -> Vec<usize> {
    t.data()
        .chunks(cols)
        .map(|r| r.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0)
        .collect()
}

fn spec(classes: usize, per_class: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        num_classes: classes,
        per_class,
        dims: 16,
        center_scale: 0.8,
        noise_sigma: 0.1,
        seed,
    }
}

#[test]
fn label_noise_rate_matches_expectation() {
    let (classes, n, p) = (5, 200, 0.4);
    let data = synth_clusters(&SynthSpec {
        per_class: n / classes,
        ..spec(classes, 0, 1)
    })
    .unwrap();
    let fractions: Vec<f64> = (0..60u64)
        .map(|seed| {
            let noisy = randomize_labels(&data, p, seed).unwrap();
            noisy.labels().iter().zip(data.labels()).filter(|(a, b)| a != b).count() as f64 / n as f64
        })
        .collect();
    let k = fractions.len() as f64;
    let mean = fractions.iter().sum::<f64>() / k;
    let sd = (fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let expected = p * (1.0 - 1.0 / classes as f64);
    assert!((mean - expected).abs() <= 3.0 * sd / k.sqrt(), "mean {mean}, expected {expected}, sd {sd}");
}

#[test]
fn loaders_stay_in_unit_range() {
    let data = synth_clusters(&SynthSpec {
        noise_sigma: 2.0,
        ..spec(3, 50, 9)
    })
    .unwrap();
    assert!(data.inputs().data().iter().all(|v| (-1.0..=1.0).contains(v)));
}

/// Plain batch gradient descent on softmax regression, written out by hand.
fn softmax_regression(x: &[f64], y: &[usize], d: usize, c: usize, steps: usize, lr: f64) -> Vec<f64> {
    let n = y.len();
    let mut w = vec![0.0; (d + 1) * c];
    for _ in 0..steps {
        let mut grad = vec![0.0; w.len()];
        for i in 0..n {
            let row = &x[i * d..(i + 1) * d];
            let z: Vec<f64> = (0..c)
                .map(|k| w[d * c + k] + row.iter().enumerate().map(|(j, v)| v * w[j * c + k]).sum::<f64>())
                .collect();
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            for k in 0..c {
                let delta = e[k] / s - if y[i] == k { 1.0 } else { 0.0 };
                for j in 0..d {
                    grad[j * c + k] += delta * row[j];
                }
                grad[d * c + k] += delta;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= lr * gi / n as f64;
        }
    }
    w
}

#[test]
fn synth_clusters_are_linearly_separable() {
    let (c, d) = (10, 16);
    let data = synth_clusters(&SynthSpec {
        noise_sigma: 0.2,
        ..spec(c, 100, 0)
    })
    .unwrap();
    let (train, test) = data.split_at(500).unwrap();
    let w = softmax_regression(train.inputs().data(), train.labels(), d, c, 300, 1.0);
    let x = test.inputs().data();
    let correct = (0..test.len())
        .filter(|&i| {
            let row = &x[i * d..(i + 1) * d];
            let score = |k: usize| w[d * c + k] + row.iter().enumerate().map(|(j, v)| v * w[j * c + k]).sum::<f64>();
            (0..c).max_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap() == test.labels()[i]
        })
        .count();
    let acc = correct as f64 / test.len() as f64;
    assert!(acc > 0.95, "held-out accuracy {acc}");
}

#[test]
fn checkpoint_round_trip_on_probe_set() {
    let net = Network::build(Preset::MlpSmall.descriptor(&PresetParams::new(&[16], 10, 77)).unwrap()).unwrap();
    let probe = random_tensor(&mut ChaCha8Rng::seed_from_u64(5), &[256, 16], 1.0);
    let back = decode_checkpoint(&encode_checkpoint(&net)).unwrap();
    let (a, b) = (net.predict_probs(&probe).unwrap(), back.predict_probs(&probe).unwrap());
    let worst = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    assert_eq!(argmax(&a, 10), argmax(&b, 10));
}
