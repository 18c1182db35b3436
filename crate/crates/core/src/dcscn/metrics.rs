use super::model::NetworkModel;
use crate::data::Dataset;
use crate::error::Result;

/// Fraction of correctly labelled samples; 0 for an empty set.
pub fn accuracy(model: &NetworkModel, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let preds = model.predict_dataset(ds)?;
    Ok(label_accuracy(
        &preds.iter().map(|p| p.label).collect::<Vec<_>>(),
        &ds.labels(),
    ))
}

pub fn label_accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// `m × m` counts, rows = truth, columns = prediction.
pub fn confusion_matrix(predicted: &[usize], truth: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut c = vec![vec![0; m]; m];
    for (&p, &t) in predicted.iter().zip(truth) {
        c[t][p] += 1;
    }
    c
}

/// Parameter amount of a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamCount {
    pub raw: usize,
    pub megabytes: f64,
}

/// `Σ_l (k²·C_{l−1} + 1)·C_l + (D + 1)·m`, reported as 32-bit reals.
pub fn param_count(model: &NetworkModel) -> ParamCount {
    let mut raw = 0;
    let mut prev = model.input.channels;
    for layer in &model.layers {
        let c = layer.kernels.len();
        let k = layer.kernel_size().unwrap_or(0);
        raw += (k * k * prev + 1) * c;
        prev = c;
    }
    raw += (model.feature_dim() + 1) * model.num_classes();
    ParamCount {
        raw,
        megabytes: raw as f64 * 4.0 / (1u64 << 20) as f64,
    }
}
