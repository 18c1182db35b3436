#![allow(dead_code)]

use dcscn::data::{generate_synthetic, preprocess_dataset, Dataset};
use dcscn::dcscn::{build, BuildConfig, NetworkModel};
use dcscn::numerics::RngStream;

pub fn small_dataset(n_per_class: usize, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed);
    preprocess_dataset(&generate_synthetic(n_per_class, 32, &mut rng).unwrap(), 32, 32).unwrap()
}

pub fn small_config() -> BuildConfig {
    BuildConfig {
        max_candidates: 12,
        max_layers: 2,
        max_kernels_per_layer: 3,
        retry_rounds: 2,
        contraction_scale: 0.01,
        ..BuildConfig::default()
    }
}

/// A small two-layer model with its train and validation sets.
pub fn toy_model(seed: u64) -> (NetworkModel, Dataset, Dataset) {
    let train = small_dataset(6, seed);
    let val = small_dataset(3, seed + 1000);
    let model = build(&train, &small_config(), &mut RngStream::new(seed)).unwrap().model;
    (model, train, val)
}

/// Model with sampled kernels in the given per-layer counts and a fitted readout.
pub fn hand_model(train: &Dataset, counts: &[usize], seed: u64) -> NetworkModel {
    use dcscn::dcscn::{feature_dim_of, solve_readout, DogKernel, InputSpec, LayerSpec, ReadoutFeatures};
    use dcscn::numerics::Matrix;
    let mut rng = RngStream::new(seed);
    let layers: Vec<LayerSpec> = counts
        .iter()
        .enumerate()
        .map(|(l, &c)| LayerSpec {
            kernels: (0..c)
                .map(|_| DogKernel::sample([0.5, 5.0], [0.8, 1.5], 3, &mut rng).unwrap())
                .collect(),
            pool_after: (l + 1) % 2 == 0,
        })
        .collect();
    let (h, w, ch) = train.image_dims();
    let input = InputSpec { h, w, channels: ch };
    let features = ReadoutFeatures::Grid { cells: 2 };
    let d = feature_dim_of(input, &layers, features).unwrap();
    let blank = NetworkModel::new(
        input,
        train.class_names().to_vec(),
        layers.clone(),
        features,
        0.0,
        Matrix::zeros(d, train.num_classes()),
    )
    .unwrap();
    let phi = blank.feature_matrix(train).unwrap();
    let fit = solve_readout(&phi, &train.one_hot(), 0.0).unwrap();
    NetworkModel::new(input, train.class_names().to_vec(), layers, features, 0.0, fit.weights).unwrap()
}
