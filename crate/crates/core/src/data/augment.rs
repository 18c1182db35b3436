use super::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream, Tensor3};

const CONTRAST_GAIN: f64 = 1.5;

/// Mirrors columns: `out(x, y) = in(w - x - 1, y)`.
pub fn flip_horizontal(img: &Tensor3) -> Tensor3 {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut out = Tensor3::zeros(h, w, c);
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                out.set(y, x, ch, img.get(y, w - x - 1, ch));
            }
        }
    }
    out
}

pub fn flip_mask(mask: &Matrix) -> Matrix {
    let w = mask.cols();
    Matrix::from_fn(mask.rows(), w, |y, x| mask.get(y, w - x - 1))
}

/// `clamp(1.5·(v − 0.5) + 0.5, 0, 1)` per pixel.
pub fn adjust_contrast(img: &Tensor3) -> Tensor3 {
    img.map(|v| (CONTRAST_GAIN * (v - 0.5) + 0.5).clamp(0.0, 1.0))
}

/// Adds `N(0, eta²)` per pixel and clamps to `[0, 1]`.
pub fn add_gaussian_noise(img: &Tensor3, eta: f64, rng: &mut RngStream) -> Result<Tensor3> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Argument(format!("noise level must be >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = (*v + rng.normal(0.0, eta)).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Original, flipped, contrast-adjusted and noised variant of every sample,
/// grouped per source sample. Only the flip moves the mask.
pub fn augment_dataset(ds: &Dataset, eta: f64, rng: &mut RngStream) -> Result<Dataset> {
    let mut out = Vec::with_capacity(ds.len() * 4);
    for s in ds.samples() {
        out.push(s.clone());
        out.push(LabeledSample {
            image: flip_horizontal(&s.image),
            label: s.label,
            mask: s.mask.as_ref().map(flip_mask),
        });
        out.push(LabeledSample {
            image: adjust_contrast(&s.image),
            label: s.label,
            mask: s.mask.clone(),
        });
        out.push(LabeledSample {
            image: add_gaussian_noise(&s.image, eta, rng)?,
            label: s.label,
            mask: s.mask.clone(),
        });
    }
    Dataset::new(out, ds.class_names().to_vec(), ds.split())
}
