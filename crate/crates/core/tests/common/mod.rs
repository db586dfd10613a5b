#![allow(dead_code)]

use edpsgd::experiment::ExperimentConfig;
use edpsgd::models::{Classifier, Example};
use edpsgd::GradientSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub const FD_STEP: f64 = 1e-5;

/// Below this magnitude a coordinate's relative error is measured against the
/// floor instead, since central differences cannot resolve it.
pub const FD_FLOOR: f64 = 1e-7;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_examples(rng: &mut StdRng, n: usize, dim: usize, classes: usize) -> Vec<Example> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| normal.sample(rng)).collect();
            Example::new(x, rng.random_range(0..classes))
        })
        .collect()
}

/// Overwrites every parameter with `N(0, std²)` draws.
pub fn randomize<M: Classifier>(model: &mut M, rng: &mut StdRng, std: f64) {
    let normal = Normal::new(0.0, std).unwrap();
    for layer in model.params_mut().layers_mut() {
        for v in layer.values.iter_mut() {
            *v = normal.sample(rng);
        }
    }
}

/// Largest relative error between the analytic gradient and central
/// differences over `coords` random `(layer, index)` coordinates.
pub fn max_fd_error<M: Classifier>(
    model: &mut M,
    examples: &[Example],
    coords: usize,
    rng: &mut StdRng,
) -> f64 {
    let analytic = model.grad_mean_loss(examples).unwrap();
    let sizes: Vec<usize> = analytic.layers().iter().map(|l| l.values.len()).collect();
    let total: usize = sizes.iter().sum();
    let mut worst = 0.0f64;
    for _ in 0..coords {
        let mut flat = rng.random_range(0..total);
        let mut layer = 0;
        while flat >= sizes[layer] {
            flat -= sizes[layer];
            layer += 1;
        }
        let original = model.params().layers()[layer].values[flat];
        model.params_mut().layers_mut()[layer].values[flat] = original + FD_STEP;
        let up = model.mean_loss(examples).unwrap();
        model.params_mut().layers_mut()[layer].values[flat] = original - FD_STEP;
        let down = model.mean_loss(examples).unwrap();
        model.params_mut().layers_mut()[layer].values[flat] = original;

        let numeric = (up - down) / (2.0 * FD_STEP);
        let exact = analytic.layers()[layer].values[flat];
        let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max(err);
    }
    worst
}

pub fn random_gradient(rng: &mut StdRng, layers: &[usize], std: f64) -> GradientSet {
    let normal = Normal::new(0.0, std).unwrap();
    GradientSet::from_layers(layers.iter().enumerate().map(|(i, &n)| {
        (
            format!("l{i}"),
            (0..n).map(|_| normal.sample(rng)).collect::<Vec<_>>(),
        )
    }))
    .unwrap()
}

pub fn max_relative_diff(a: &GradientSet, b: &GradientSet) -> f64 {
    a.values()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Label-noised blobs on which an unprotected Mlp2 memorises its training set.
pub fn mia_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
seed = {seed}
optimizer = "sgd"
epochs = 500
batch_size = 50
learning_rate = 0.01

[dataset]
size = 400
classes = 4
dimension = 20
spread = 1.5
label_noise = 0.2

[model]
kind = "mlp2"
hidden = 64

[dp]
clip_c = 1.0
z0 = 1.0
workers = 5
"#
    ))
    .unwrap()
}

/// Mlp2 workload for throughput comparisons: 10 batches of 256.
pub fn bench_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
seed = 11
optimizer = "sgd"
epochs = 1
batch_size = 256

[dataset]
size = 5120
classes = 10
dimension = 64
spread = 1.0

[model]
kind = "mlp2"
hidden = 256

[dp]
clip_c = 1.0
z0 = 1.0
workers = 8
"#,
    )
    .unwrap()
}
