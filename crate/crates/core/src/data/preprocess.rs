use super::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::numerics::{bilinear_resize, Matrix, Tensor3};

fn center_crop_plane(plane: &Matrix, crop: usize) -> Matrix {
    let top = (plane.rows() - crop) / 2;
    let left = (plane.cols() - crop) / 2;
    Matrix::from_fn(crop, crop, |i, j| plane.get(top + i, left + j))
}

fn check_crop(h: usize, w: usize, crop: usize, resize: usize) -> Result<()> {
    if crop == 0 || crop > h.min(w) {
        return Err(Error::Dimension(format!(
            "crop {crop} does not fit image {h}x{w}"
        )));
    }
    if resize == 0 {
        return Err(Error::Dimension("resize target must be positive".into()));
    }
    Ok(())
}

/// Center-crops to `crop × crop`, bilinearly resizes to `resize × resize`
/// and maps `[0, 1]` onto `[-1, 1]`.
pub fn preprocess(img: &Tensor3, crop: usize, resize: usize) -> Result<Tensor3> {
    check_crop(img.height(), img.width(), crop, resize)?;
    let planes = (0..img.channels())
        .map(|c| {
            let cropped = center_crop_plane(&img.channel(c), crop);
            Ok(bilinear_resize(&cropped, resize, resize)?.map(|v| (2.0 * v - 1.0).clamp(-1.0, 1.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor3::from_channels(&planes)
}

/// Same geometry as [`preprocess`] for a `{0,1}` mask; resampled values are
/// re-binarised at 0.5.
pub fn preprocess_mask(mask: &Matrix, crop: usize, resize: usize) -> Result<Matrix> {
    check_crop(mask.rows(), mask.cols(), crop, resize)?;
    let resized = bilinear_resize(&center_crop_plane(mask, crop), resize, resize)?;
    Ok(resized.map(|v| if v >= 0.5 { 1.0 } else { 0.0 }))
}

pub fn preprocess_dataset(ds: &Dataset, crop: usize, resize: usize) -> Result<Dataset> {
    let samples = ds
        .samples()
        .iter()
        .map(|s| {
            LabeledSample::new(
                preprocess(&s.image, crop, resize)?,
                s.label,
                s.mask.as_ref().map(|m| preprocess_mask(m, crop, resize)).transpose()?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, ds.class_names().to_vec(), ds.split())
}

/// Inverse of the final normalisation step: `[-1, 1]` back to `[0, 1]`.
pub fn to_intensity(img: &Tensor3) -> Tensor3 {
    img.map(|v| (v + 1.0) * 0.5)
}
