use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

/// A difference-of-Gaussians convolution unit with its materialised grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DogKernel {
    /// Standard deviation of the narrow Gaussian.
    pub xi: f64,
    /// Scale factor of the wide Gaussian (`r·xi`).
    pub r: f64,
    /// Odd side length.
    pub k: usize,
    pub bias: f64,
    pub weights: Matrix,
}

/// `ψ(x, y) = (1/2π)·[exp(−d²/2ξ²) − (1/r)·exp(−d²/2r²ξ²)]`, `d² = x² + y²`.
pub fn dog_value(xi: f64, r: f64, x: f64, y: f64) -> f64 {
    let d2 = x * x + y * y;
    let narrow = (-d2 / (2.0 * xi * xi)).exp();
    let wide = (-d2 / (2.0 * r * r * xi * xi)).exp() / r;
    (narrow - wide) / std::f64::consts::TAU
}

impl DogKernel {
    pub fn new(xi: f64, r: f64, k: usize, bias: f64) -> Result<Self> {
        if k == 0 || k % 2 == 0 {
            return Err(Error::Argument(format!("kernel side must be odd, got {k}")));
        }
        if !(xi > 0.0 && xi.is_finite()) || !(r > 0.0 && r.is_finite()) || !bias.is_finite() {
            return Err(Error::Argument(format!(
                "invalid kernel parameters xi={xi}, r={r}, bias={bias}"
            )));
        }
        let c = (k as f64 - 1.0) / 2.0;
        let weights = Matrix::from_fn(k, k, |i, j| dog_value(xi, r, j as f64 - c, i as f64 - c));
        Ok(Self {
            xi,
            r,
            k,
            bias,
            weights,
        })
    }

    /// Draws ξ, r and the bias (in that order) and materialises the grid.
    pub fn sample(
        xi_range: [f64; 2],
        r_range: [f64; 2],
        k: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let xi = rng.uniform(xi_range[0], xi_range[1])?;
        let r = rng.uniform(r_range[0], r_range[1])?;
        let bias = rng.uniform(0.0, 1.0)?;
        Self::new(xi, r, k, bias)
    }
}
