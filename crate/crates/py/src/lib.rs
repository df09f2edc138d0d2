//! Python bindings: datasets, networks, training, KL and dissection.
//!
//! Samples cross the boundary as flat lists of floats, one list per sample;
//! the receiving side reshapes them to the network's input shape.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use memlab::data::{randomize_labels, synth_clusters, LabeledDataset, SynthSpec};
use memlab::dissection::{self, ClusterGenerator, DissectConfig, LatentGenerator, ObjectiveKind};
use memlab::models::{load_checkpoint, save_checkpoint, ModelError, Network, Preset, PresetParams};
use memlab::tensor::{OptimizerKind, Tensor};
use memlab::training::{self, TrainConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model_err(e: ModelError) -> PyErr {
    match e {
        ModelError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn batch(rows: Vec<Vec<f64>>, sample_shape: &[usize]) -> PyResult<Tensor> {
    let width: usize = sample_shape.iter().product();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(value_err(format!("each sample needs {width} values, got {}", bad.len())));
    }
    let mut shape = vec![rows.len()];
    shape.extend_from_slice(sample_shape);
    Tensor::new(shape, rows.concat()).map_err(value_err)
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    let n = t.shape()[0];
    t.data().chunks(t.len() / n).map(<[f64]>::to_vec).collect()
}

#[pyclass(name = "Dataset", module = "pymemlab", frozen)]
struct PyDataset(LabeledDataset);

#[pymethods]
impl PyDataset {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    #[getter]
    fn sample_shape(&self) -> Vec<usize> {
        self.0.sample_shape().to_vec()
    }

    fn inputs(&self) -> Vec<Vec<f64>> {
        rows(self.0.inputs())
    }

    fn labels(&self) -> Vec<usize> {
        self.0.labels().to_vec()
    }

    /// Copy with `round(noise_level * len)` labels redrawn uniformly.
    fn randomize_labels(&self, noise_level: f64, seed: u64) -> PyResult<PyDataset> {
        randomize_labels(&self.0, noise_level, seed).map(PyDataset).map_err(value_err)
    }

    /// First `n` samples and the rest.
    fn split_at(&self, n: usize) -> PyResult<(PyDataset, PyDataset)> {
        let (a, b) = self.0.split_at(n).map_err(value_err)?;
        Ok((PyDataset(a), PyDataset(b)))
    }
}

#[pyfunction]
#[pyo3(signature = (num_classes=10, per_class=50, dims=16, center_scale=0.8, noise_sigma=0.35, seed=0))]
fn synth_clusters_py(num_classes: usize, per_class: usize, dims: usize, center_scale: f64, noise_sigma: f64, seed: u64) -> PyResult<PyDataset> {
    let spec = SynthSpec {
        num_classes,
        per_class,
        dims,
        center_scale,
        noise_sigma,
        seed,
    };
    synth_clusters(&spec).map(PyDataset).map_err(value_err)
}

#[pyclass(name = "Network", module = "pymemlab", frozen)]
struct PyNetwork(Network);

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    #[pyo3(signature = (preset, data_shape, num_classes, init_seed=0, hidden=None, latent_dim=None))]
    fn from_preset(preset: &str, data_shape: Vec<usize>, num_classes: usize, init_seed: u64, hidden: Option<usize>, latent_dim: Option<usize>) -> PyResult<Self> {
        let preset: Preset = preset.parse().map_err(model_err)?;
        let mut p = PresetParams::new(&data_shape, num_classes, init_seed);
        p.hidden = hidden;
        if let Some(l) = latent_dim {
            p.latent_dim = l;
        }
        let desc = preset.descriptor(&p).map_err(model_err)?;
        Network::build(desc).map(PyNetwork).map_err(model_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_checkpoint(path).map(PyNetwork).map_err(model_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_checkpoint(&self.0, path).map_err(model_err)
    }

    #[getter]
    fn role(&self) -> String {
        self.0.role().to_string()
    }

    #[getter]
    fn input_shape(&self) -> Vec<usize> {
        self.0.input_shape().to_vec()
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.0.parameter_count()
    }

    fn checksum(&self) -> String {
        self.0.checksum()
    }

    fn descriptor(&self) -> String {
        self.0.descriptor().to_text()
    }

    fn logits(&self, samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = batch(samples, self.0.input_shape())?;
        self.0.logits(&x).map(|t| rows(&t)).map_err(model_err)
    }

    fn predict_probs(&self, samples: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = batch(samples, self.0.input_shape())?;
        self.0.predict_probs(&x).map(|t| rows(&t)).map_err(model_err)
    }

    fn generate(&self, latents: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let z = batch(latents, self.0.input_shape())?;
        self.0.generate(&z).map(|t| rows(&t)).map_err(model_err)
    }
}

#[pyclass(name = "ClusterGenerator", module = "pymemlab", frozen)]
struct PyClusterGenerator(ClusterGenerator);

#[pymethods]
impl PyClusterGenerator {
    /// Closed-form generator for the clusters `synth_clusters` draws with
    /// the same arguments.
    #[new]
    #[pyo3(signature = (num_classes=10, dims=16, center_scale=0.8, noise_sigma=0.35, seed=0))]
    fn new(num_classes: usize, dims: usize, center_scale: f64, noise_sigma: f64, seed: u64) -> PyResult<Self> {
        let spec = SynthSpec {
            num_classes,
            per_class: 1,
            dims,
            center_scale,
            noise_sigma,
            seed,
        };
        ClusterGenerator::for_spec(&spec).map(PyClusterGenerator).map_err(value_err)
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.0.latent_dim()
    }

    fn generate(&self, latents: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let z = batch(latents, &[self.0.latent_dim()])?;
        self.0.generate(&z).map(|t| rows(&t)).map_err(value_err)
    }
}

fn with_generator<T>(gen: &Bound<'_, PyAny>, f: impl FnOnce(&dyn LatentGenerator) -> PyResult<T>) -> PyResult<T> {
    if let Ok(c) = gen.cast::<PyClusterGenerator>() {
        return f(&c.get().0);
    }
    if let Ok(n) = gen.cast::<PyNetwork>() {
        return f(&n.get().0);
    }
    Err(value_err("generator must be a ClusterGenerator or a generator Network"))
}

fn objective(name: &str) -> PyResult<ObjectiveKind> {
    match name {
        "logit" => Ok(ObjectiveKind::Logit),
        "probability" => Ok(ObjectiveKind::Probability),
        other => Err(value_err(format!("objective must be 'logit' or 'probability', got {other:?}"))),
    }
}

/// Trains a preset classifier; returns the network and the report CSV text.
#[pyfunction]
#[pyo3(signature = (dataset, preset="mlp-small", epochs=100, batch_size=32, lr=0.01, momentum=0.9, seed=0, hidden=None, test=None, track_input_gradients=true))]
#[allow(clippy::too_many_arguments)]
fn train_classifier(
    dataset: &PyDataset,
    preset: &str,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    momentum: f64,
    seed: u64,
    hidden: Option<usize>,
    test: Option<PyRef<'_, PyDataset>>,
    track_input_gradients: bool,
) -> PyResult<(PyNetwork, String)> {
    let ds = &dataset.0;
    let preset: Preset = preset.parse().map_err(model_err)?;
    let mut p = PresetParams::new(ds.sample_shape(), ds.num_classes(), seed);
    p.hidden = hidden;
    let mut cfg = TrainConfig::new(preset.descriptor(&p).map_err(model_err)?, epochs);
    cfg.batch_size = batch_size;
    cfg.optimizer = OptimizerKind::SgdMomentum { lr, momentum };
    cfg.seed = seed;
    cfg.track_input_gradients = track_input_gradients;
    let (net, report) = training::train_classifier(&cfg, ds, test.as_ref().map(|t| &t.0)).map_err(value_err)?;
    Ok((PyNetwork(net), report.to_csv()))
}

#[pyfunction]
#[pyo3(signature = (p, q, epsilon=dissection::KL_EPSILON))]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>, epsilon: f64) -> PyResult<f64> {
    dissection::kl_divergence(&p, &q, epsilon).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (classifier, generator, class_index, seed, lr=0.05, iterations=1000, objective="logit"))]
#[allow(clippy::too_many_arguments)]
fn activation_maximize<'py>(
    py: Python<'py>,
    classifier: &PyNetwork,
    generator: &Bound<'py, PyAny>,
    class_index: usize,
    seed: u64,
    lr: f64,
    iterations: usize,
    objective: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = self::objective(objective)?;
    let r = with_generator(generator, |g| {
        dissection::activation_maximize(&classifier.0, g, class_index, seed, lr, iterations, kind).map_err(value_err)
    })?;
    let d = PyDict::new(py);
    d.set_item("class_index", r.class)?;
    d.set_item("seed", r.seed)?;
    d.set_item("z_init", r.z_init.data().to_vec())?;
    d.set_item("z_star", r.z_star.data().to_vec())?;
    d.set_item("x_star", r.x_star.data().to_vec())?;
    d.set_item("objective_trace", r.objective_trace)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (reference, probe, generator, seeds_per_class=10, lr=0.05, iterations=1000, objective="logit"))]
#[allow(clippy::too_many_arguments)]
fn dissect_pair<'py>(
    py: Python<'py>,
    reference: &PyNetwork,
    probe: &PyNetwork,
    generator: &Bound<'py, PyAny>,
    seeds_per_class: usize,
    lr: f64,
    iterations: usize,
    objective: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = DissectConfig {
        seeds_per_class,
        lr,
        iterations,
        objective: self::objective(objective)?,
        ..DissectConfig::default()
    };
    let r = with_generator(generator, |g| dissection::dissect_pair(&reference.0, &probe.0, g, &cfg).map_err(value_err))?;
    let d = PyDict::new(py);
    d.set_item("dist_mean", r.dist_mean)?;
    d.set_item("dist_variance", r.dist_variance)?;
    d.set_item("class_means", r.class_means.clone())?;
    d.set_item("terms", r.terms.iter().map(|t| (t.class, t.seed, t.kl)).collect::<Vec<_>>())?;
    d.set_item("csv", r.to_csv())?;
    Ok(d)
}

#[pymodule]
fn pymemlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyClusterGenerator>()?;
    m.add("synth_clusters", wrap_pyfunction!(synth_clusters_py, m)?)?;
    m.add_function(wrap_pyfunction!(train_classifier, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(activation_maximize, m)?)?;
    m.add_function(wrap_pyfunction!(dissect_pair, m)?)?;
    Ok(())
}
