use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ReadoutFeatures;
use super::kernel::DogKernel;
use super::model::{InputSpec, LayerSpec, LayoutEntry, NetworkModel};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelDoc {
    xi: f64,
    r: f64,
    k: usize,
    bias: f64,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    pool_after: bool,
    kernels: Vec<KernelDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    input: InputSpec,
    classes: Vec<String>,
    features: ReadoutFeatures,
    ridge: f64,
    layers: Vec<LayerDoc>,
    readout: MatrixDoc,
    layout: Vec<LayoutEntry>,
}

pub fn model_to_json(model: &NetworkModel) -> Result<String> {
    let doc = ModelDoc {
        version: MODEL_FORMAT_VERSION,
        input: model.input,
        classes: model.class_names.clone(),
        features: model.features,
        ridge: model.ridge,
        layers: model
            .layers
            .iter()
            .map(|l| LayerDoc {
                pool_after: l.pool_after,
                kernels: l
                    .kernels
                    .iter()
                    .map(|k| KernelDoc {
                        xi: k.xi,
                        r: k.r,
                        k: k.k,
                        bias: k.bias,
                        weights: k.weights.data().to_vec(),
                    })
                    .collect(),
            })
            .collect(),
        readout: MatrixDoc {
            rows: model.readout.rows(),
            cols: model.readout.cols(),
            data: model.readout.data().to_vec(),
        },
        layout: model.layout.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses a model document. Stored weights are used as-is.
pub fn model_from_json(text: &str) -> Result<NetworkModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::Argument(format!(
            "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
            doc.version
        )));
    }
    let layers = doc
        .layers
        .into_iter()
        .map(|l| {
            let kernels = l
                .kernels
                .into_iter()
                .map(|k| {
                    Ok(DogKernel {
                        xi: k.xi,
                        r: k.r,
                        k: k.k,
                        bias: k.bias,
                        weights: Matrix::new(k.k, k.k, k.weights)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LayerSpec {
                kernels,
                pool_after: l.pool_after,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let readout = Matrix::new(doc.readout.rows, doc.readout.cols, doc.readout.data)?;
    let model = NetworkModel::new(doc.input, doc.classes, layers, doc.features, doc.ridge, readout)?;
    if model.layout != doc.layout {
        return Err(Error::Shape(
            "stored feature layout does not match the layer structure".into(),
        ));
    }
    Ok(model)
}

pub fn save_model(model: &NetworkModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NetworkModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}
