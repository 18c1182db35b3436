//! Samples and datasets, augmentation, preprocessing, synthetic scenes and
//! PNG folder ingestion.
//!
//! Raw images live on the `[0, 1]` intensity scale; [`preprocess`] maps them
//! onto the `[-1, 1]` model input scale.

mod augment;
mod folder;
mod preprocess;
mod synthetic;

pub use augment::{add_gaussian_noise, adjust_contrast, augment_dataset, flip_horizontal, flip_mask};
pub use folder::{load_image_folder, save_image_folder};
pub use preprocess::{preprocess, preprocess_dataset, preprocess_mask, to_intensity};
pub use synthetic::{generate_synthetic, SYNTHETIC_CLASSES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream, Tensor3};

/// One image with its class index and an optional `{0,1}` annotation mask.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub image: Tensor3,
    pub label: usize,
    pub mask: Option<Matrix>,
}

impl LabeledSample {
    pub fn new(image: Tensor3, label: usize, mask: Option<Matrix>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.shape() != (image.height(), image.width()) {
                return Err(Error::Shape(format!(
                    "mask {:?} does not match image {}x{}",
                    m.shape(),
                    image.height(),
                    image.width()
                )));
            }
        }
        Ok(Self { image, label, mask })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    All,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::All => "all",
        })
    }
}

/// Non-empty collection of equally sized samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    class_names: Vec<String>,
    split: Split,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, class_names: Vec<String>, split: Split) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Argument("dataset has no samples".into()))?;
        let dims = (first.image.height(), first.image.width(), first.image.channels());
        for (i, s) in samples.iter().enumerate() {
            let d = (s.image.height(), s.image.width(), s.image.channels());
            if d != dims {
                return Err(Error::Shape(format!(
                    "sample {i} has dims {d:?}, expected {dims:?}"
                )));
            }
            if s.label >= class_names.len() {
                return Err(Error::Argument(format!(
                    "sample {i} has label {} but only {} classes",
                    s.label,
                    class_names.len()
                )));
            }
        }
        Ok(Self {
            samples,
            class_names,
            split,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// (height, width, channels) shared by every sample.
    pub fn image_dims(&self) -> (usize, usize, usize) {
        let img = &self.samples[0].image;
        (img.height(), img.width(), img.channels())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// N × m one-hot label matrix.
    pub fn one_hot(&self) -> Matrix {
        let mut y = Matrix::zeros(self.len(), self.num_classes());
        for (i, s) in self.samples.iter().enumerate() {
            y.set(i, s.label, 1.0);
        }
        y
    }

    /// Sub-dataset with the listed samples, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Argument(format!("sample index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, self.class_names.clone(), self.split)
    }

    /// Per-class shuffled split into (train, val, test) by the given fractions.
    /// Each class contributes `round(f·n)` samples to train and val and the
    /// remainder to test.
    pub fn stratified_split(
        &self,
        train_frac: f64,
        val_frac: f64,
        rng: &mut RngStream,
    ) -> Result<(Dataset, Dataset, Dataset)> {
        if !(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0) {
            return Err(Error::Argument(format!(
                "invalid split fractions {train_frac}/{val_frac}"
            )));
        }
        let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
        for class in 0..self.num_classes() {
            let mut idx: Vec<usize> = (0..self.len())
                .filter(|&i| self.samples[i].label == class)
                .collect();
            rng.shuffle(&mut idx);
            let n = idx.len();
            let n_tr = ((train_frac * n as f64).round() as usize).min(n);
            let n_va = ((val_frac * n as f64).round() as usize).min(n - n_tr);
            tr.extend_from_slice(&idx[..n_tr]);
            va.extend_from_slice(&idx[n_tr..n_tr + n_va]);
            te.extend_from_slice(&idx[n_tr + n_va..]);
        }
        for part in [&mut tr, &mut va, &mut te] {
            part.sort_unstable();
        }
        Ok((
            self.subset(&tr)?.with_split(Split::Train),
            self.subset(&va)?.with_split(Split::Val),
            self.subset(&te)?.with_split(Split::Test),
        ))
    }
}
