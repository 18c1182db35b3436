use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ReadoutFeatures;
use super::kernel::DogKernel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cross_correlate, max_pool, sigmoid, softmax, Matrix, Tensor3};

/// Side of the max-pool window inserted after pooling layers.
pub const POOL_WINDOW: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub h: usize,
    pub w: usize,
    pub channels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kernels: Vec<DogKernel>,
    pub pool_after: bool,
}

impl LayerSpec {
    pub fn kernel_size(&self) -> Option<usize> {
        self.kernels.first().map(|k| k.k)
    }

    /// Spatial size of this layer's maps for an input of `h × w`.
    pub fn output_dims(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let k = self.kernel_size().unwrap_or(1);
        output_dims(h, w, k, self.pool_after)
    }
}

/// Post-activation, post-pool map size of a `k × k` kernel on an `h × w` input.
pub fn output_dims(h: usize, w: usize, k: usize, pool: bool) -> Result<(usize, usize)> {
    if h < k || w < k {
        return Err(Error::Dimension(format!(
            "{h}x{w} input is smaller than the {k}x{k} kernel"
        )));
    }
    let (ch, cw) = (h - k + 1, w - k + 1);
    if !pool {
        return Ok((ch, cw));
    }
    if ch < POOL_WINDOW || cw < POOL_WINDOW {
        return Err(Error::Dimension(format!(
            "{ch}x{cw} map is smaller than the pooling window"
        )));
    }
    Ok((ch / POOL_WINDOW, cw / POOL_WINDOW))
}

/// Location of one kernel's block inside the readout feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub layer: usize,
    pub kernel: usize,
    pub offset: usize,
    pub len: usize,
}

/// `sigmoid(corr(s, W) + b)`, max-pooled when `pool` is set. `s` is the
/// channel sum of the layer input.
pub fn kernel_map(input_sum: &Matrix, kernel: &DogKernel, pool: bool) -> Result<Matrix> {
    let pre = cross_correlate(input_sum, &kernel.weights)?;
    let act = pre.map(|v| sigmoid(v + kernel.bias));
    if pool {
        max_pool(&act, POOL_WINDOW)
    } else {
        Ok(act)
    }
}

/// Output stack of one layer. Weights are shared across input channels, so
/// the channels are summed once and correlated per kernel.
pub fn layer_forward(input: &Tensor3, layer: &LayerSpec) -> Result<Tensor3> {
    if input.channels() == 0 {
        return Err(Error::Shape("layer input has no channels".into()));
    }
    if layer.kernels.is_empty() {
        return Err(Error::Shape("layer has no kernels".into()));
    }
    let s = input.channel_sum();
    let maps = layer
        .kernels
        .iter()
        .map(|k| kernel_map(&s, k, layer.pool_after))
        .collect::<Result<Vec<_>>>()?;
    Tensor3::from_channels(&maps)
}

/// Readout inputs contributed by one map.
pub fn summarize_map(map: &Matrix, mode: ReadoutFeatures) -> Result<Vec<f64>> {
    match mode {
        ReadoutFeatures::FullMap => Ok(map.data().to_vec()),
        ReadoutFeatures::Grid { cells } => {
            let (h, w) = map.shape();
            if cells == 0 || h < cells || w < cells {
                return Err(Error::Dimension(format!(
                    "{h}x{w} map cannot be summarised on a {cells}x{cells} grid"
                )));
            }
            let mut out = Vec::with_capacity(cells * cells);
            for a in 0..cells {
                let (y0, y1) = (a * h / cells, ((a + 1) * h).div_ceil(cells));
                for b in 0..cells {
                    let (x0, x1) = (b * w / cells, ((b + 1) * w).div_ceil(cells));
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        acc += map.row(y)[x0..x1].iter().sum::<f64>();
                    }
                    out.push(acc / ((y1 - y0) * (x1 - x0)) as f64);
                }
            }
            Ok(out)
        }
    }
}

/// A constructed classifier: convolutional layers plus a linear readout fed
/// by every kernel of every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub input: InputSpec,
    pub class_names: Vec<String>,
    pub layers: Vec<LayerSpec>,
    pub features: ReadoutFeatures,
    pub ridge: f64,
    pub readout: Matrix,
    pub layout: Vec<LayoutEntry>,
}

impl NetworkModel {
    /// Assembles a model, deriving the feature layout and checking that the
    /// readout has one row per feature.
    pub fn new(
        input: InputSpec,
        class_names: Vec<String>,
        layers: Vec<LayerSpec>,
        features: ReadoutFeatures,
        ridge: f64,
        readout: Matrix,
    ) -> Result<Self> {
        if class_names.is_empty() {
            return Err(Error::Argument("model needs at least one class".into()));
        }
        let layout = compute_layout(input, &layers, features)?;
        let d = layout.last().map_or(0, |e| e.offset + e.len);
        if readout.shape() != (d, class_names.len()) {
            return Err(Error::Shape(format!(
                "readout is {:?}, expected ({d}, {})",
                readout.shape(),
                class_names.len()
            )));
        }
        Ok(Self {
            input,
            class_names,
            layers,
            features,
            ridge,
            readout,
            layout,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_kernels(&self) -> usize {
        self.layers.iter().map(|l| l.kernels.len()).sum()
    }

    pub fn kernels_per_layer(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.kernels.len()).collect()
    }

    /// Readout input dimension D.
    pub fn feature_dim(&self) -> usize {
        self.layout.last().map_or(0, |e| e.offset + e.len)
    }

    pub fn check_input(&self, img: &Tensor3) -> Result<()> {
        let got = (img.height(), img.width(), img.channels());
        let want = (self.input.h, self.input.w, self.input.channels);
        if got != want {
            return Err(Error::Shape(format!(
                "image is {got:?}, model expects {want:?}"
            )));
        }
        Ok(())
    }

    /// Output stacks of the first `upto` layers.
    pub fn layer_outputs(&self, img: &Tensor3, upto: usize) -> Result<Vec<Tensor3>> {
        self.check_input(img)?;
        if upto > self.layers.len() {
            return Err(Error::Argument(format!(
                "layer {upto} requested from a {}-layer model",
                self.layers.len()
            )));
        }
        let mut outs: Vec<Tensor3> = Vec::with_capacity(upto);
        for layer in &self.layers[..upto] {
            let next = layer_forward(outs.last().unwrap_or(img), layer)?;
            outs.push(next);
        }
        Ok(outs)
    }

    /// Readout feature row of one image, in layout order.
    pub fn features(&self, img: &Tensor3) -> Result<Vec<f64>> {
        self.check_input(img)?;
        let mut row = Vec::with_capacity(self.feature_dim());
        let mut s = img.channel_sum();
        for layer in &self.layers {
            let mut next: Option<Matrix> = None;
            for k in &layer.kernels {
                let map = kernel_map(&s, k, layer.pool_after)?;
                row.extend(summarize_map(&map, self.features)?);
                match &mut next {
                    None => next = Some(map.map(|v| 0.0 + v)),
                    Some(acc) => {
                        for (a, &v) in acc.data_mut().iter_mut().zip(map.data()) {
                            *a += v;
                        }
                    }
                }
            }
            s = next.ok_or_else(|| Error::Shape("layer has no kernels".into()))?;
        }
        Ok(row)
    }

    /// N × D matrix of readout features, one row per sample.
    pub fn feature_matrix(&self, ds: &Dataset) -> Result<Matrix> {
        let rows = ds
            .samples()
            .par_iter()
            .map(|s| self.features(&s.image))
            .collect::<Result<Vec<_>>>()?;
        let d = self.feature_dim();
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            data.extend(r);
        }
        Matrix::new(ds.len(), d, data)
    }

    /// Readout scores `φᵀO` for a feature row.
    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let m = self.num_classes();
        let mut out = vec![0.0; m];
        for (i, &f) in features.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.readout.row(i)) {
                *o += f * w;
            }
        }
        out
    }

    pub fn predict(&self, img: &Tensor3) -> Result<Prediction> {
        let f = self.features(img)?;
        Ok(Prediction::from_logits(&self.logits(&f)))
    }

    pub fn predict_batch(&self, imgs: &[Tensor3]) -> Result<Vec<Prediction>> {
        imgs.par_iter().map(|img| self.predict(img)).collect()
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        ds.samples()
            .par_iter()
            .map(|s| self.predict(&s.image))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub label: usize,
}

impl Prediction {
    pub fn from_logits(logits: &[f64]) -> Self {
        let probabilities = softmax(logits);
        Self {
            label: argmax(&probabilities),
            probabilities,
        }
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Readout dimension D of a layer stack.
pub fn feature_dim_of(
    input: InputSpec,
    layers: &[LayerSpec],
    features: ReadoutFeatures,
) -> Result<usize> {
    Ok(compute_layout(input, layers, features)?
        .last()
        .map_or(0, |e| e.offset + e.len))
}

pub(crate) fn compute_layout(
    input: InputSpec,
    layers: &[LayerSpec],
    features: ReadoutFeatures,
) -> Result<Vec<LayoutEntry>> {
    let (mut h, mut w) = (input.h, input.w);
    let mut layout = Vec::new();
    let mut offset = 0;
    for (li, layer) in layers.iter().enumerate() {
        if layer.kernels.is_empty() {
            return Err(Error::Shape(format!("layer {} has no kernels", li + 1)));
        }
        let k = layer.kernels[0].k;
        if layer.kernels.iter().any(|kern| kern.k != k) {
            return Err(Error::Shape(format!(
                "layer {} mixes kernel sizes",
                li + 1
            )));
        }
        let (oh, ow) = layer.output_dims(h, w)?;
        if oh < features.min_side() || ow < features.min_side() {
            return Err(Error::Dimension(format!(
                "layer {} maps ({oh}x{ow}) are too small for the readout summary",
                li + 1
            )));
        }
        let len = features.len_for(oh, ow);
        for ki in 0..layer.kernels.len() {
            layout.push(LayoutEntry {
                layer: li,
                kernel: ki,
                offset,
                len,
            });
            offset += len;
        }
        (h, w) = (oh, ow);
    }
    Ok(layout)
}
