use nalgebra::linalg::SVD;

use super::Matrix;
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one are treated as zero
/// by the pseudoinverse.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, `k = min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// rows × k
    pub u: Matrix,
    /// k values, descending
    pub singular_values: Vec<f64>,
    /// k × cols
    pub v_t: Matrix,
}

fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} contains non-finite values")))
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    ensure_finite(m, "matrix")?;
    if m.is_empty() {
        return Err(Error::Dimension("svd of an empty matrix".into()));
    }
    let dec = SVD::try_new(m.to_nalgebra(), true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric("svd did not converge".into()))?;
    let u = dec.u.as_ref().expect("u requested");
    let v_t = dec.v_t.as_ref().expect("v_t requested");
    // nalgebra does not promise an ordering
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let k = order.len();
    Ok(Svd {
        u: Matrix::from_fn(m.rows(), k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| dec.singular_values[j]).collect(),
        v_t: Matrix::from_fn(k, m.cols(), |i, j| v_t[(order[i], j)]),
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    ensure_finite(m, "matrix")?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let dec = SVD::try_new(m.to_nalgebra(), false, false, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numeric("svd did not converge".into()))?;
    let mut s: Vec<f64> = dec.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Minimises `‖targets − features·O‖²_F + ridge·‖O‖²_F`.
///
/// With `ridge = 0` this is the minimum-norm pseudoinverse solution; singular
/// values under [`PINV_RELATIVE_CUTOFF`] × σ_max are discarded either way.
pub fn least_squares(features: &Matrix, targets: &Matrix, ridge: f64) -> Result<Matrix> {
    let (n, d) = features.shape();
    if n == 0 || d == 0 {
        return Err(Error::Dimension(format!(
            "least squares needs a non-empty design, got {n}x{d}"
        )));
    }
    if targets.rows() != n {
        return Err(Error::Dimension(format!(
            "{} target rows for {n} feature rows",
            targets.rows()
        )));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::Argument(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    ensure_finite(features, "feature matrix")?;
    ensure_finite(targets, "target matrix")?;

    let dec = svd(features)?;
    let m = targets.cols();
    let k = dec.singular_values.len();
    let s_max = dec.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = PINV_RELATIVE_CUTOFF * s_max;

    // Z = diag(f(s)) Uᵀ Y, k × m
    let mut z = Matrix::zeros(k, m);
    for (j, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let factor = if ridge > 0.0 { s / (s * s + ridge) } else { 1.0 / s };
        let zr = z.row_mut(j);
        for i in 0..n {
            let u = dec.u.get(i, j);
            if u == 0.0 {
                continue;
            }
            for (zv, &y) in zr.iter_mut().zip(targets.row(i)) {
                *zv += u * y;
            }
        }
        for zv in zr.iter_mut() {
            *zv *= factor;
        }
    }
    dec.v_t.transpose().matmul(&z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_returns_targets() {
        let y = Matrix::new(3, 2, vec![1.0, -2.0, 0.5, 3.0, 4.0, 0.0]).unwrap();
        let o = least_squares(&Matrix::identity(3), &y, 0.0).unwrap();
        for (a, b) in o.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_norm_small() {
        assert_eq!(nuclear_norm(&Matrix::zeros(3, 3)).unwrap(), 0.0);
        let d = Matrix::new(2, 2, vec![3.0, 0.0, 0.0, -4.0]).unwrap();
        assert!((nuclear_norm(&d).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let bad = Matrix::new(1, 1, vec![f64::NAN]).unwrap();
        assert!(matches!(
            least_squares(&bad, &Matrix::zeros(1, 1), 0.0),
            Err(Error::Numeric(_))
        ));
        assert!(nuclear_norm(&bad).is_err());
    }

    #[test]
    fn ridge_shrinks_solution() {
        let phi = Matrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let y = Matrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let plain = least_squares(&phi, &y, 0.0).unwrap().get(0, 0);
        let ridged = least_squares(&phi, &y, 1.0).unwrap().get(0, 0);
        assert!((plain - 1.0).abs() < 1e-12);
        assert!((ridged - 14.0 / 15.0).abs() < 1e-12);
    }
}
