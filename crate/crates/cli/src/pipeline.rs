//! Dataset preparation shared by every command, so that `train`, `eval`,
//! `explain` and `prune` see the same splits for the same config and seed.

use dcscn::data::{
    augment_dataset, generate_synthetic, load_image_folder, preprocess_dataset, Dataset,
};
use dcscn::numerics::RngStream;

use crate::config::{DataConfig, RunConfig};
use crate::error::CliResult;

/// Independent random streams derived from the run seed, one per stage.
pub struct Streams {
    pub data: RngStream,
    pub split: RngStream,
    pub augment: RngStream,
    pub build: RngStream,
    pub prune: RngStream,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let mut root = RngStream::new(seed);
        Self {
            data: root.split(),
            split: root.split(),
            augment: root.split(),
            build: root.split(),
            prune: root.split(),
        }
    }
}

pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Unprocessed `[0, 1]` dataset: the image folder if configured, else synthetic.
pub fn raw_dataset(cfg: &DataConfig, rng: &mut RngStream) -> CliResult<Dataset> {
    Ok(match &cfg.dir {
        Some(dir) => load_image_folder(dir)?,
        None => generate_synthetic(cfg.synthetic_per_class, cfg.synthetic_size, rng)?,
    })
}

pub fn prepare(cfg: &RunConfig, streams: &mut Streams) -> CliResult<Splits> {
    let raw = raw_dataset(&cfg.data, &mut streams.data)?;
    let crop = cfg.data.crop.unwrap_or_else(|| {
        raw.samples()
            .iter()
            .map(|s| s.image.height().min(s.image.width()))
            .min()
            .unwrap_or(0)
    });
    let ds = preprocess_dataset(&raw, crop, cfg.data.resize)?;
    let (train, val, test) =
        ds.stratified_split(cfg.data.train_frac, cfg.data.val_frac, &mut streams.split)?;
    let train = if cfg.data.augment {
        augment_dataset(&train, cfg.data.eta, &mut streams.augment)?
    } else {
        train
    };
    Ok(Splits { train, val, test })
}
