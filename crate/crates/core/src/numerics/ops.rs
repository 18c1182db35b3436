use super::Matrix;
use crate::error::{Error, Result};

/// Valid-mode cross-correlation: `out[i][j] = Σ_p Σ_n input[i+p][j+n] · kernel[p][n]`.
pub fn cross_correlate(input: &Matrix, kernel: &Matrix) -> Result<Matrix> {
    let (h, w) = input.shape();
    let (kh, kw) = kernel.shape();
    if kh == 0 || kw == 0 || kh > h || kw > w {
        return Err(Error::Dimension(format!(
            "kernel {kh}x{kw} does not fit input {h}x{w}"
        )));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = Matrix::zeros(oh, ow);
    for p in 0..kh {
        for n in 0..kw {
            let k = kernel.get(p, n);
            for i in 0..oh {
                let src = &input.row(i + p)[n..n + ow];
                for (o, &v) in out.row_mut(i).iter_mut().zip(src) {
                    *o += v * k;
                }
            }
        }
    }
    Ok(out)
}

/// Non-overlapping max pooling (stride = window); trailing partial windows are dropped.
pub fn max_pool(input: &Matrix, window: usize) -> Result<Matrix> {
    let (h, w) = input.shape();
    if window == 0 || window > h || window > w {
        return Err(Error::Dimension(format!(
            "pool window {window} does not fit input {h}x{w}"
        )));
    }
    let (oh, ow) = (h / window, w / window);
    Ok(Matrix::from_fn(oh, ow, |i, j| {
        let mut m = f64::NEG_INFINITY;
        for y in i * window..(i + 1) * window {
            for &v in &input.row(y)[j * window..(j + 1) * window] {
                m = m.max(v);
            }
        }
        m
    }))
}

/// Align-corners bilinear resampling.
pub fn bilinear_resize(input: &Matrix, out_h: usize, out_w: usize) -> Result<Matrix> {
    let (h, w) = input.shape();
    if h == 0 || w == 0 {
        return Err(Error::Dimension("cannot resize an empty matrix".into()));
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::Dimension(format!(
            "target size {out_h}x{out_w} must be at least 1x1"
        )));
    }
    if (h, w) == (out_h, out_w) {
        return Ok(input.clone());
    }
    let ys: Vec<(usize, usize, f64)> = (0..out_h).map(|d| source_coord(d, h, out_h)).collect();
    let xs: Vec<(usize, usize, f64)> = (0..out_w).map(|d| source_coord(d, w, out_w)).collect();
    Ok(Matrix::from_fn(out_h, out_w, |i, j| {
        let (y0, y1, fy) = ys[i];
        let (x0, x1, fx) = xs[j];
        let top = input.get(y0, x0) * (1.0 - fx) + input.get(y0, x1) * fx;
        let bottom = input.get(y1, x0) * (1.0 - fx) + input.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }))
}

fn source_coord(dst: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    if dst_len <= 1 || src_len == 1 {
        return (0, 0, 0.0);
    }
    let s = dst as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64;
    let lo = (s.floor() as usize).min(src_len - 1);
    let hi = (lo + 1).min(src_len - 1);
    (lo, hi, s - lo as f64)
}

/// Max-subtracted softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let i = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = m(&[&[1.0]]);
        assert_eq!(cross_correlate(&i, &k).unwrap(), i);
    }

    #[test]
    fn ones_kernel_sums() {
        let i = Matrix::filled(3, 3, 1.0);
        let k = Matrix::filled(3, 3, 1.0);
        assert_eq!(cross_correlate(&i, &k).unwrap().data(), &[9.0]);
    }

    #[test]
    fn kernel_larger_than_input() {
        let i = Matrix::filled(2, 2, 1.0);
        let k = Matrix::filled(3, 3, 1.0);
        assert!(matches!(cross_correlate(&i, &k), Err(Error::Dimension(_))));
    }

    #[test]
    fn pool_basic() {
        let i = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(max_pool(&i, 2).unwrap().data(), &[4.0]);
        assert_eq!(max_pool(&i, 1).unwrap(), i);
        assert!(max_pool(&i, 3).is_err());
        assert!(max_pool(&i, 0).is_err());
    }

    #[test]
    fn pool_drops_trailing() {
        let i = Matrix::from_fn(5, 5, |r, c| (r * 5 + c) as f64);
        let p = max_pool(&i, 2).unwrap();
        assert_eq!(p.shape(), (2, 2));
        assert_eq!(p.data(), &[6.0, 8.0, 16.0, 18.0]);
    }

    #[test]
    fn resize_cases() {
        let c = Matrix::filled(3, 4, 2.5);
        assert_eq!(bilinear_resize(&c, 7, 2).unwrap(), Matrix::filled(7, 2, 2.5));
        let r = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(bilinear_resize(&r, 3, 3).unwrap(), r);
        let row = m(&[&[0.0, 1.0]]);
        assert_eq!(bilinear_resize(&row, 1, 3).unwrap().data(), &[0.0, 0.5, 1.0]);
        assert!(bilinear_resize(&Matrix::zeros(0, 0), 2, 2).is_err());
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let e = std::f64::consts::E;
        let p = softmax(&[1.0, 2.0]);
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
        let a = softmax(&[0.3, 0.3, 0.3]);
        let b = softmax(&[1000.3, 1000.3, 1000.3]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn activations() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(3.0), 3.0);
        for x in [-5.0, -0.7, 0.1, 2.0, 9.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }
}
