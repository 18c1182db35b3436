//! Dense kernels shared by every other module.

mod linalg;
mod matrix;
mod ops;
mod rng;
mod tensor;

pub use linalg::{least_squares, nuclear_norm, singular_values, spectral_norm, svd, Svd, PINV_RELATIVE_CUTOFF};
pub use matrix::Matrix;
pub use ops::{bilinear_resize, cross_correlate, max_pool, relu, sigmoid, softmax};
pub use rng::RngStream;
pub use tensor::Tensor3;
