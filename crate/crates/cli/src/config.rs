//! Run configuration: one JSON object with flat dotted keys such as
//! `"build.error_limit"` or `"ddpg.episodes"`, mirroring the library configs.

use std::path::{Path, PathBuf};

use dcscn::dcscn::BuildConfig;
use dcscn::interpret::{CamSettings, ScoreWeighting};
use dcscn::prune::DdpgConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Image-folder root; the synthetic generator is used when absent.
    pub dir: Option<PathBuf>,
    pub synthetic_per_class: usize,
    pub synthetic_size: usize,
    /// Center-crop side; defaults to the shorter image side.
    pub crop: Option<usize>,
    pub resize: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Quadruples the training split with flip, contrast and noise variants.
    pub augment: bool,
    pub eta: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: None,
            synthetic_per_class: 100,
            synthetic_size: 64,
            crop: None,
            resize: 64,
            train_frac: 0.5,
            val_frac: 0.1,
            augment: false,
            eta: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CamConfig {
    /// 1-based layer; 0 selects the final layer.
    pub layer: usize,
    pub theta: f64,
    pub weighting: ScoreWeighting,
    /// Heatmap PNGs written by `explain`, spread over the classes.
    pub max_images: usize,
}

impl Default for CamConfig {
    fn default() -> Self {
        let s = CamSettings::default();
        Self {
            layer: 0,
            theta: s.theta,
            weighting: s.weighting,
            max_images: 16,
        }
    }
}

impl CamConfig {
    pub fn settings(&self) -> CamSettings {
        CamSettings {
            theta: self.theta,
            weighting: self.weighting,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Thread count for candidate scoring and per-sample work; 0 uses all cores.
    pub workers: usize,
    pub out: PathBuf,
    pub data: DataConfig,
    pub build: BuildConfig,
    pub ddpg: DdpgConfig,
    pub cam: CamConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            workers: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            build: BuildConfig::default(),
            ddpg: DdpgConfig::default(),
            cam: CamConfig::default(),
        }
    }
}

fn nest(flat: Map<String, Value>) -> CliResult<Value> {
    let mut root = Map::new();
    for (key, value) in flat {
        match key.split_once('.') {
            None => {
                if root.insert(key.clone(), value).is_some() {
                    return Err(CliError::Config(format!("duplicate key {key}")));
                }
            }
            Some((section, field)) => {
                if field.is_empty() || field.contains('.') {
                    return Err(CliError::Config(format!("malformed key {key}")));
                }
                let entry = root
                    .entry(section.to_string())
                    .or_insert_with(|| Value::Object(Map::new()));
                let Value::Object(obj) = entry else {
                    return Err(CliError::Config(format!("key {section} is not a section")));
                };
                obj.insert(field.to_string(), value);
            }
        }
    }
    Ok(Value::Object(root))
}

impl RunConfig {
    /// Parses a flat dotted-key document; unknown keys are rejected.
    pub fn from_json_str(text: &str) -> CliResult<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let Value::Object(flat) = value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        serde_json::from_value(nest(flat)?).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Flat dotted-key form, suitable for [`RunConfig::from_json_str`].
    pub fn to_flat_json(&self) -> String {
        let nested = serde_json::to_value(self).expect("config serializes");
        let mut flat = Map::new();
        if let Value::Object(root) = nested {
            for (key, value) in root {
                match value {
                    Value::Object(section) => {
                        for (field, v) in section {
                            flat.insert(format!("{key}.{field}"), v);
                        }
                    }
                    other => {
                        flat.insert(key, other);
                    }
                }
            }
        }
        serde_json::to_string_pretty(&Value::Object(flat)).expect("json") + "\n"
    }

    /// Checks every section; returns warnings for legal but risky settings.
    pub fn validate(&self) -> CliResult<Vec<String>> {
        let invalid = |e: dcscn::Error| CliError::Config(e.to_string());
        self.build.validate().map_err(invalid)?;
        self.ddpg.validate().map_err(invalid)?;
        self.cam.settings().validate().map_err(invalid)?;
        let d = &self.data;
        if !(d.train_frac > 0.0 && d.val_frac > 0.0 && d.train_frac + d.val_frac < 1.0) {
            return Err(CliError::Config(format!(
                "data fractions must leave non-empty train, val and test splits (train {}, val {})",
                d.train_frac, d.val_frac
            )));
        }
        if d.resize == 0 || d.crop == Some(0) {
            return Err(CliError::Config("data.resize and data.crop must be positive".into()));
        }
        if d.dir.is_none() && d.synthetic_per_class == 0 {
            return Err(CliError::Config("data.synthetic_per_class must be positive".into()));
        }
        if !(d.eta >= 0.0 && d.eta.is_finite()) {
            return Err(CliError::Config("data.eta must be >= 0".into()));
        }
        let mut warnings = Vec::new();
        if self.build.r_range_contains_one() {
            warnings.push(format!(
                "build.r_range {:?} contains 1, where DoG kernels vanish",
                self.build.r_range
            ));
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_json_str(&cfg.to_flat_json()).unwrap(), cfg);
    }

    #[test]
    fn dotted_keys_override() {
        let cfg = RunConfig::from_json_str(r#"{"seed": 3, "build.max_layers": 2, "ddpg.episodes": 5}"#)
            .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.build.max_layers, 2);
        assert_eq!(cfg.ddpg.episodes, 5);
        assert_eq!(cfg.build.error_limit, BuildConfig::default().error_limit);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json_str(r#"{"build.nope": 1}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"nope": 1}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"a.b.c": 1}"#).is_err());
        assert!(RunConfig::from_json_str("[]").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.validate().unwrap().len(), 1);
        cfg.build.r_range = [1.1, 1.5];
        assert!(cfg.validate().unwrap().is_empty());
        cfg.build.kernel_size = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.build.xi_range = [0.0, 1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.data.val_frac = 0.5;
        assert!(cfg.validate().is_err());
    }
}
