//! Monte Carlo machinery: reproducible parallel path batches, two-line
//! surplus simulation, infinite-horizon ruin estimation, non-homogeneous
//! Poisson arrivals and bootstrap ruin bands.

mod bootstrap;
mod engine;
mod nhpp;
mod paths;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub use bootstrap::{
    bootstrap_ruin_band, empirical_ruin_curve, BandPoint, BandTemplate, PremiumRule, RuinBand,
};
pub use engine::{run_batches, run_paths, stream, Moments, BATCH_SIZE};
pub use nhpp::{nhpp_sample, nhpp_sample_inversion, IntensityKind, IntensityModel};
pub use paths::{
    estimate_line_ruin_mc, estimate_pair, estimate_ruin_mc, estimate_ruin_mc_with, line_walk,
    next_arrival, simulate_two_dim_path, Arrivals, PathSummary, RuinKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationRule {
    FixedHorizon,
    LundbergAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub workers: usize,
    pub truncation: TruncationRule,
    pub ci_level: f64,
    /// Per-path bound on the ruin probability left over when a path is
    /// retired early because its surplus passed the Lundberg escape level.
    pub escape_bound: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            horizon: 100.0,
            seed: 0,
            workers: 1,
            truncation: TruncationRule::LundbergAdaptive,
            ci_level: 0.95,
            escape_bound: 1e-9,
        }
    }
}

impl SimulationConfig {
    pub fn with_paths(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(Error::BadSampleSize(self.paths));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ci_level must lie in (0,1), got {}",
                self.ci_level
            )));
        }
        if !(self.escape_bound > 0.0 && self.escape_bound < 1e-3) {
            return Err(Error::InvalidConfig(format!(
                "escape_bound must lie in (0, 1e-3), got {}",
                self.escape_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    MonteCarlo,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
    pub method: Method,
    pub paths: usize,
    /// Unclamped estimate; differs from `value` only when noise pushed it
    /// outside [0, 1].
    pub raw_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

impl RuinEstimate {
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
            ci_level: 1.0,
            method: Method::Analytic,
            paths: 0,
            raw_value: value,
            truncation_bound: None,
            horizon: None,
        }
    }

    pub fn from_mean(raw: f64, stderr: f64, paths: usize, ci_level: f64, method: Method) -> Self {
        let value = raw.clamp(0.0, 1.0);
        let z = normal_quantile(0.5 + ci_level / 2.0);
        Self {
            value,
            stderr,
            ci_low: (raw - z * stderr).clamp(0.0, 1.0).min(value),
            ci_high: (raw + z * stderr).clamp(0.0, 1.0).max(value),
            ci_level,
            method,
            paths,
            raw_value: raw,
            truncation_bound: None,
            horizon: None,
        }
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_distance(&self, other: &RuinEstimate) -> f64 {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let d = (self.raw_value - other.raw_value).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}
