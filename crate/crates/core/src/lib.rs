//! Tools for telling learning apart from memorization in small neural
//! networks: an autodiff engine, dataset loaders with label randomization,
//! classifier and GAN training with input-gradient telemetry, latent-space
//! activation maximization, and a KL-based dissimilarity between classifiers.

pub mod tensor;
pub mod data;

mod rng;
pub mod models;
pub mod training;
pub mod dissection;
pub mod experiment;
