use nalgebra::DMatrix;

use crate::numerics::{nuclear_norm, Matrix, Tensor3};
use crate::error::Result;

/// Per-channel feature independence of one layer's output stack.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceScores {
    pub coefficients: Vec<f64>,
    /// Number of samples averaged into the coefficients.
    pub samples: usize,
    /// Set when the stack had zero nuclear norm.
    pub degenerate: bool,
}

/// `(H·W) × C` matrix with one column per channel.
pub fn channel_matrix(a: &Tensor3) -> Matrix {
    let hw = a.height() * a.width();
    Matrix::from_fn(hw, a.channels(), |i, c| a.plane(c)[i])
}

/// Replaces a tall matrix by the `C × C` factor `R` of its QR decomposition.
/// Singular values are preserved, and zeroing a column of `A` zeroes the
/// same column of `R`, so every nuclear norm below can use the small factor.
fn reduce(a: &Matrix) -> Matrix {
    if a.rows() <= a.cols() {
        return a.clone();
    }
    let qr = a.to_nalgebra().qr();
    let r: DMatrix<f64> = qr.r();
    Matrix::from_nalgebra(&r)
}

/// `FC_ϱ = (‖A‖_* − ‖A Ξ_ϱ‖_*) / ‖A‖_*` with `A` the channel matrix and
/// `Ξ_ϱ` zeroing column ϱ. A zero stack yields all-zero coefficients.
pub fn independence_coefficients(a: &Tensor3) -> Result<IndependenceScores> {
    let c = a.channels();
    let r = reduce(&channel_matrix(a));
    let total = if r.is_empty() { 0.0 } else { nuclear_norm(&r)? };
    if !(total > 0.0) {
        return Ok(IndependenceScores {
            coefficients: vec![0.0; c],
            samples: 1,
            degenerate: true,
        });
    }
    let mut coefficients = Vec::with_capacity(c);
    for rho in 0..c {
        let mut masked = r.clone();
        for i in 0..masked.rows() {
            masked.set(i, rho, 0.0);
        }
        let rest = nuclear_norm(&masked)?;
        coefficients.push(((total - rest) / total).clamp(0.0, 1.0));
    }
    Ok(IndependenceScores {
        coefficients,
        samples: 1,
        degenerate: false,
    })
}

/// Element-wise mean of per-sample scores.
pub fn mean_scores(scores: &[IndependenceScores]) -> Option<IndependenceScores> {
    let first = scores.first()?;
    let c = first.coefficients.len();
    let mut acc = vec![0.0; c];
    for s in scores {
        for (a, v) in acc.iter_mut().zip(&s.coefficients) {
            *a += v;
        }
    }
    let n = scores.len() as f64;
    Some(IndependenceScores {
        coefficients: acc.into_iter().map(|v| v / n).collect(),
        samples: scores.iter().map(|s| s.samples).sum(),
        degenerate: scores.iter().all(|s| s.degenerate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_channel_is_fully_independent() {
        let a = Tensor3::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = independence_coefficients(&a).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_stack_is_degenerate() {
        let s = independence_coefficients(&Tensor3::zeros(3, 3, 2)).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.coefficients, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicated_channel_halves() {
        let plane = vec![1.0, -2.0, 0.5, 3.0];
        let mut data = plane.clone();
        data.extend(&plane);
        let s = independence_coefficients(&Tensor3::new(2, 2, 2, data).unwrap()).unwrap();
        assert!((s.coefficients[0] - s.coefficients[1]).abs() < 1e-12);
        assert!(s.coefficients[0] <= 0.5 + 1e-12);
    }
}
