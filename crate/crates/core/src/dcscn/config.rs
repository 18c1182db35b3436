use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How one kernel's post-pool map is presented to the readout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReadoutFeatures {
    /// Every pixel of the map is a readout input.
    FullMap,
    /// The map is average-pooled onto a `cells × cells` grid; `cells = 1`
    /// gives one scalar (the global mean) per kernel.
    Grid { cells: usize },
}

impl ReadoutFeatures {
    /// Number of readout inputs contributed by a map of the given size.
    pub fn len_for(&self, h: usize, w: usize) -> usize {
        match *self {
            ReadoutFeatures::FullMap => h * w,
            ReadoutFeatures::Grid { cells } => cells * cells,
        }
    }

    /// Smallest map side this mode can summarise.
    pub fn min_side(&self) -> usize {
        match *self {
            ReadoutFeatures::FullMap => 1,
            ReadoutFeatures::Grid { cells } => cells,
        }
    }
}

/// Construction hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Training rmse at which construction stops.
    pub error_limit: f64,
    /// Candidates drawn per round.
    pub max_candidates: usize,
    pub xi_range: [f64; 2],
    pub r_range: [f64; 2],
    pub kernel_size: usize,
    pub max_layers: usize,
    pub max_kernels_per_layer: usize,
    /// A 2×2 max pool follows every `pool_every`-th layer.
    pub pool_every: usize,
    /// Candidate rounds before a layer is closed.
    pub retry_rounds: usize,
    pub ridge: f64,
    /// `λ` in the contraction sequence `u_C = λ / C`.
    pub contraction_scale: f64,
    pub readout: ReadoutFeatures,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            error_limit: 0.01,
            max_candidates: 100,
            xi_range: [0.5, 5.0],
            r_range: [0.8, 1.5],
            kernel_size: 3,
            max_layers: 10,
            max_kernels_per_layer: 50,
            pool_every: 2,
            retry_rounds: 10,
            ridge: 0.0,
            contraction_scale: 0.02,
            readout: ReadoutFeatures::Grid { cells: 4 },
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0] > 0.0 && r[0] < r[1] && r[1].is_finite()) {
        return Err(Error::Argument(format!(
            "{name} must satisfy 0 < lo < hi, got [{}, {}]",
            r[0], r[1]
        )));
    }
    Ok(())
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("xi_range", self.xi_range)?;
        check_range("r_range", self.r_range)?;
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::Argument(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !(self.error_limit >= 0.0 && self.error_limit.is_finite()) {
            return Err(Error::Argument("error_limit must be >= 0".into()));
        }
        if self.max_candidates == 0
            || self.max_layers == 0
            || self.max_kernels_per_layer == 0
            || self.pool_every == 0
            || self.retry_rounds == 0
        {
            return Err(Error::Argument(
                "max_candidates, max_layers, max_kernels_per_layer, pool_every and retry_rounds must be positive"
                    .into(),
            ));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Argument("ridge must be >= 0".into()));
        }
        if !(self.contraction_scale >= 0.0 && self.contraction_scale.is_finite()) {
            return Err(Error::Argument("contraction_scale must be >= 0".into()));
        }
        if let ReadoutFeatures::Grid { cells: 0 } = self.readout {
            return Err(Error::Argument("readout grid needs at least one cell".into()));
        }
        Ok(())
    }

    /// True when the r range straddles 1, where a kernel can vanish.
    pub fn r_range_contains_one(&self) -> bool {
        self.r_range[0] <= 1.0 && 1.0 <= self.r_range[1]
    }

    /// `u_C` for the `c`-th kernel (1-based) of a layer.
    pub fn contraction(&self, c: usize) -> f64 {
        self.contraction_scale / c as f64
    }

    pub fn pools_after(&self, layer: usize) -> bool {
        layer % self.pool_every == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = BuildConfig::default();
        c.validate().unwrap();
        assert_eq!(c.error_limit, 0.01);
        assert_eq!(c.max_candidates, 100);
        assert_eq!(c.max_layers, 10);
        assert_eq!(c.max_kernels_per_layer, 50);
        assert!(!c.pools_after(1) && c.pools_after(2) && !c.pools_after(3) && c.pools_after(4));
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = BuildConfig::default();
        c.kernel_size = 4;
        assert!(c.validate().is_err());
        let mut c = BuildConfig::default();
        c.xi_range = [0.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = BuildConfig::default();
        c.r_range = [1.5, 0.8];
        assert!(c.validate().is_err());
    }
}
