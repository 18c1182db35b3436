//! Deep convolutional stochastic configuration networks.
//!
//! A convolutional classifier is grown one difference-of-Gaussians kernel at a
//! time. Each candidate kernel is drawn at random, scored against the current
//! training residual and admitted only if its convergence score is positive;
//! the fully connected readout is re-solved by least squares after every
//! admission. Built models can be explained with a class-activation map
//! weighted by per-channel nuclear-norm independence, scored against annotated
//! regions with IoU, and narrowed by a DDPG agent that picks per-layer pruning
//! ratios.
//!
//! - [`numerics`]: matrices, correlation, pooling, resampling, SVD-backed solvers, seeded RNG
//! - [`data`]: samples, augmentation, preprocessing, synthetic furnace scenes, PNG folders
//! - [`dcscn`]: kernels, models, incremental construction, inference, metrics, persistence
//! - [`interpret`]: independence scores, CAM, IoU, heat-map export
//! - [`prune`]: kernel ranking, pruning environment, DDPG agent

pub mod data;
pub mod dcscn;
pub mod error;
pub mod interpret;
pub mod numerics;
pub mod prune;

pub use error::{Error, Result};
