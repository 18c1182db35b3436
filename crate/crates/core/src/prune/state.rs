use crate::dcscn::NetworkModel;
use crate::error::Result;

pub const STATE_DIM: usize = 6;

/// Normalised `(l, C_l, C_{l−1}, h, w, a_{l−1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneState {
    values: [f64; STATE_DIM],
}

impl PruneState {
    pub fn from_values(values: [f64; STATE_DIM]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; STATE_DIM] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Un-normalised state fields for one layer visit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawState {
    pub layer: usize,
    pub kernels: usize,
    pub prev_kernels: usize,
    pub h: usize,
    pub w: usize,
    pub prev_action: f64,
}

impl RawState {
    fn as_array(&self) -> [f64; STATE_DIM] {
        [
            self.layer as f64,
            self.kernels as f64,
            self.prev_kernels as f64,
            self.h as f64,
            self.w as f64,
            self.prev_action,
        ]
    }
}

/// Per-field min-max bounds taken from the unpruned model.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBounds {
    lo: [f64; STATE_DIM],
    hi: [f64; STATE_DIM],
}

/// Output map size of every layer of `model`.
pub fn layer_dims(model: &NetworkModel) -> Result<Vec<(usize, usize)>> {
    let (mut h, mut w) = (model.input.h, model.input.w);
    let mut dims = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        (h, w) = layer.output_dims(h, w)?;
        dims.push((h, w));
    }
    Ok(dims)
}

impl StateBounds {
    pub fn from_model(model: &NetworkModel, a_max: f64) -> Result<Self> {
        let dims = layer_dims(model)?;
        let counts = model.kernels_per_layer();
        let max_c = counts.iter().copied().max().unwrap_or(1).max(model.input.channels) as f64;
        let hs = dims.iter().map(|d| d.0 as f64);
        let ws = dims.iter().map(|d| d.1 as f64);
        let (h_lo, h_hi) = (hs.clone().fold(f64::INFINITY, f64::min), hs.fold(0.0, f64::max));
        let (w_lo, w_hi) = (ws.clone().fold(f64::INFINITY, f64::min), ws.fold(0.0, f64::max));
        Ok(Self {
            lo: [1.0, 1.0, 1.0, h_lo, w_lo, 0.0],
            hi: [model.layers.len() as f64, max_c, max_c, h_hi, w_hi, a_max],
        })
    }

    pub fn normalize(&self, raw: &RawState) -> PruneState {
        let v = raw.as_array();
        let mut out = [0.0; STATE_DIM];
        for k in 0..STATE_DIM {
            let span = self.hi[k] - self.lo[k];
            out[k] = if span > 0.0 {
                ((v[k] - self.lo[k]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        PruneState { values: out }
    }
}
