use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::independence::{independence_coefficients, IndependenceScores};
use super::iou::iou;
use crate::data::{to_intensity, Dataset};
use crate::dcscn::NetworkModel;
use crate::error::{Error, Result};
use crate::numerics::{bilinear_resize, relu, Matrix, Tensor3};

/// Default highlight threshold as a fraction of the peak heat.
pub const DEFAULT_THETA: f64 = 0.5;

/// How a channel's class score `S_{ϱ,q}` weights its map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreWeighting {
    /// `FC_ϱ · S_{ϱ,q}`. Every weight is non-negative.
    Softmax,
    /// `FC_ϱ · (S_{ϱ,q} − mean_ϱ S_{ϱ,q})`: channels whose overlay scores
    /// below the layer average pull the heat down before rectification.
    /// Falls back to `Softmax` for a single-channel layer.
    #[default]
    Centered,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CamSettings {
    pub theta: f64,
    pub weighting: ScoreWeighting,
}

impl Default for CamSettings {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            weighting: ScoreWeighting::default(),
        }
    }
}

impl CamSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Argument(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Class activation map at input resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct CamMap {
    /// Non-negative heat scaled so its maximum is 1 (all zero if degenerate).
    pub heat: Matrix,
    pub class: usize,
    /// `{0,1}` mask of pixels with `heat ≥ θ`.
    pub highlight: Matrix,
    /// Set when the rectified heat was identically zero.
    pub degenerate: bool,
}

/// Output stack of layer `layer` (1-based).
pub fn layer_feature_stack(model: &NetworkModel, img: &Tensor3, layer: usize) -> Result<Tensor3> {
    if layer == 0 || layer > model.layers.len() {
        return Err(Error::Argument(format!(
            "layer {layer} out of range 1..={}",
            model.layers.len()
        )));
    }
    let mut outs = model.layer_outputs(img, layer)?;
    Ok(outs.pop().expect("at least one layer computed"))
}

/// Min-max normalisation to `[0, 1]`; a constant map becomes zeros and is
/// reported as degenerate.
pub fn normalize_map(m: &Matrix) -> (Matrix, bool) {
    let (lo, hi) = (m.min_value(), m.max_value());
    if !(hi > lo) {
        return (Matrix::zeros(m.rows(), m.cols()), true);
    }
    (m.map(|v| (v - lo) / (hi - lo)), false)
}

fn upsampled_mask(a: &Matrix, h: usize, w: usize) -> Result<(Matrix, bool)> {
    Ok(normalize_map(&bilinear_resize(a, h, w)?))
}

/// Image masked by one channel map.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub image: Tensor3,
    pub degenerate: bool,
}

/// Resizes `a` to the image, min-max normalises it and multiplies it into
/// every channel.
pub fn overlay_channel(a: &Matrix, img: &Tensor3) -> Result<Overlay> {
    let (mask, degenerate) = upsampled_mask(a, img.height(), img.width())?;
    Ok(Overlay {
        image: multiply_mask(img, &mask),
        degenerate,
    })
}

fn multiply_mask(img: &Tensor3, mask: &Matrix) -> Tensor3 {
    let mut out = img.clone();
    for c in 0..out.channels() {
        for (v, &m) in out.plane_mut(c).iter_mut().zip(mask.data()) {
            *v *= m;
        }
    }
    out
}

/// Softmax class probabilities of the model on an (overlaid) image.
pub fn class_scores(model: &NetworkModel, overlaid: &Tensor3) -> Result<Vec<f64>> {
    Ok(model.predict(overlaid)?.probabilities)
}

/// CAM of class `class` at layer `layer` for a model-scale (`[-1, 1]`) image.
///
/// Each channel's normalised map masks the image on its `[0, 1]` intensity
/// scale, so suppressed pixels go dark, and the masked image is mapped back
/// to model scale before scoring.
pub fn cam(
    model: &NetworkModel,
    img: &Tensor3,
    layer: usize,
    class: usize,
    settings: &CamSettings,
) -> Result<CamMap> {
    settings.validate()?;
    if class >= model.num_classes() {
        return Err(Error::Argument(format!(
            "class {class} out of range for {} classes",
            model.num_classes()
        )));
    }
    let stack = layer_feature_stack(model, img, layer)?;
    let fc = independence_coefficients(&stack)?;
    cam_with_scores(model, img, &stack, &fc, class, settings)
}

/// CAM from a precomputed stack and independence coefficients.
pub fn cam_with_scores(
    model: &NetworkModel,
    img: &Tensor3,
    stack: &Tensor3,
    fc: &IndependenceScores,
    class: usize,
    settings: &CamSettings,
) -> Result<CamMap> {
    let (h, w) = (img.height(), img.width());
    let intensity = to_intensity(img);
    let terms = (0..stack.channels())
        .into_par_iter()
        .map(|rho| {
            let (mask, _) = upsampled_mask(&stack.channel(rho), h, w)?;
            let masked = multiply_mask(&intensity, &mask).map(|v| 2.0 * v - 1.0);
            let s = class_scores(model, &masked)?[class];
            Ok((s, mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let offset = match settings.weighting {
        ScoreWeighting::Centered if terms.len() > 1 => {
            terms.iter().map(|t| t.0).sum::<f64>() / terms.len() as f64
        }
        _ => 0.0,
    };
    let mut heat = Matrix::zeros(h, w);
    for (rho, (s, mask)) in terms.iter().enumerate() {
        let weight = fc.coefficients[rho] * (s - offset);
        for (acc, &m) in heat.data_mut().iter_mut().zip(mask.data()) {
            *acc += weight * m;
        }
    }
    let heat = heat.map(relu);
    let peak = heat.max_value();
    if !(peak > 0.0) {
        return Ok(CamMap {
            heat: Matrix::zeros(h, w),
            class,
            highlight: Matrix::zeros(h, w),
            degenerate: true,
        });
    }
    let heat = heat.map(|v| v / peak);
    let highlight = heat.map(|v| if v >= settings.theta { 1.0 } else { 0.0 });
    Ok(CamMap {
        heat,
        class,
        highlight,
        degenerate: false,
    })
}

/// IoU of one sample's true-class highlight against its annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleIou {
    pub sample_id: usize,
    pub class: usize,
    pub iou: f64,
}

/// Per-sample IoU over a fully annotated dataset.
pub fn iou_per_sample(
    model: &NetworkModel,
    ds: &Dataset,
    layer: usize,
    settings: &CamSettings,
) -> Result<Vec<SampleIou>> {
    let missing: Vec<usize> = ds
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.mask.is_none())
        .map(|(i, _)| i)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Argument(format!(
            "samples without masks: {missing:?}"
        )));
    }
    ds.samples()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let map = cam(model, &s.image, layer, s.label, settings)?;
            let truth = s.mask.as_ref().expect("checked above");
            Ok(SampleIou {
                sample_id: i,
                class: s.label,
                iou: iou(&map.highlight, truth)?,
            })
        })
        .collect()
}

/// Mean true-class IoU over the dataset.
pub fn iou_dataset(
    model: &NetworkModel,
    ds: &Dataset,
    layer: usize,
    settings: &CamSettings,
) -> Result<f64> {
    let rows = iou_per_sample(model, ds, layer, settings)?;
    Ok(rows.iter().map(|r| r.iou).sum::<f64>() / rows.len().max(1) as f64)
}

pub fn iou_csv(rows: &[SampleIou]) -> String {
    let mut out = String::from("sample_id,class,iou\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.sample_id, r.class, r.iou));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_is_degenerate() {
        let (m, d) = normalize_map(&Matrix::filled(3, 3, 0.7));
        assert!(d);
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_map_blanks_image() {
        let img = Tensor3::filled(4, 4, 2, 0.3);
        let o = overlay_channel(&Matrix::zeros(2, 2), &img).unwrap();
        assert!(o.image.data().iter().all(|&v| v == 0.0));
    }
}
