//! Mean-intensity hat fitness and the rank-correlation analysis used to pick
//! a computable fitness proxy from artist rankings.

mod correlation;

use serde::{Deserialize, Serialize};

use crate::image::GrayImage;
use crate::{Error, Result};

pub use correlation::{proxy_selection, rank, spearman, Correlation, CorrelationReport, MetricCorrelation};

/// Hat parameters (`fitness` in the run config).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessConfig {
    pub mu_min: f64,
    pub mu_max: f64,
    pub gamma: f64,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig { mu_min: 0.05, mu_max: 0.95, gamma: 0.75 }
    }
}

impl FitnessConfig {
    /// Requires `0 <= mu_min < gamma < mu_max <= 1`.
    pub fn validate(&self) -> Result<()> {
        let FitnessConfig { mu_min, mu_max, gamma } = *self;
        if 0.0 <= mu_min && mu_min < gamma && gamma < mu_max && mu_max <= 1.0 {
            Ok(())
        } else {
            Err(Error::param("fitness", format!("need 0 <= mu_min < gamma < mu_max <= 1, got {mu_min}, {gamma}, {mu_max}")))
        }
    }

    /// Piecewise-linear hat: 0 outside `[mu_min, mu_max]`, 1 at `gamma`.
    pub fn of_mean(&self, mu: f64) -> f64 {
        if !(self.mu_min..=self.mu_max).contains(&mu) {
            0.0
        } else if mu < self.gamma {
            (mu - self.mu_min) / (self.gamma - self.mu_min)
        } else {
            (self.mu_max - mu) / (self.mu_max - self.gamma)
        }
    }
}

pub fn fitness(img: &GrayImage, cfg: &FitnessConfig) -> Result<f64> {
    cfg.validate()?;
    if img.is_empty() {
        return Err(Error::EmptyImage { width: img.width(), height: img.height() });
    }
    Ok(cfg.of_mean(img.mean()))
}
