//! TOML experiment files.
//!
//! ```toml
//! scheme = "synthetic"      # synthetic | waveform | white
//! metric = "cc"
//! trials = 200
//! master_seed = 7
//! l_r_s = 604800
//! snr_db = -25
//!
//! [model]
//! sigma_x = 0.01
//!
//! [grid]
//! l_t_s = [60, 120, 300, 600]
//! ```
//!
//! Every key is optional. Factor values given under `[grid]` override the
//! scalar of the same name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    sweep::{spec_at, FactorGrid, SkippedPoint},
    ExperimentSpec, ReferenceSource, Scheme, DEFAULT_AR_COEFFICIENT, DEFAULT_EPSILON_S,
    DEFAULT_SIGMA_X,
};
use crate::error::{EnfError, Result};
use crate::estimation::EstimatorConfig;
use crate::matching::{CensusConfig, MetricKind, Strategy};
use crate::model::Ar1Params;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub a: f64,
    pub sigma_x: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            a: DEFAULT_AR_COEFFICIENT,
            sigma_x: DEFAULT_SIGMA_X,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub scheme: Scheme,
    pub metric: MetricKind,
    pub trials: usize,
    pub master_seed: u64,
    pub sample_rate_hz: f64,
    pub nominal_hz: f64,
    pub frame_for_crlb: usize,
    pub l_t_s: f64,
    pub l_r_s: f64,
    pub delta_spp: f64,
    pub snr_db: f64,
    /// Tolerance in seconds, converted per grid point. Defaults to 10 s.
    pub epsilon_s: Option<f64>,
    /// Fixed tolerance in samples; excludes `epsilon_s`.
    pub epsilon_samples: Option<usize>,
    /// `"synthetic"` or a path to a WAV or ENFT file.
    pub reference: String,
    pub synth_resolution_spp: f64,
    pub strategy: Strategy,
    pub census_thresholds: Option<Vec<f64>>,
    pub model: ModelSection,
    pub estimator: EstimatorConfig,
    pub grid: FactorGrid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = ExperimentSpec::default();
        Self {
            scheme: d.scheme,
            metric: d.metric,
            trials: d.trials,
            master_seed: d.master_seed,
            sample_rate_hz: d.sample_rate_hz,
            nominal_hz: d.nominal_hz,
            frame_for_crlb: d.frame_for_crlb,
            l_t_s: d.l_t_s,
            l_r_s: d.l_r_s,
            delta_spp: d.delta_spp,
            snr_db: d.snr_db,
            epsilon_s: None,
            epsilon_samples: None,
            reference: "synthetic".into(),
            synth_resolution_spp: d.synth_resolution_spp,
            strategy: d.strategy,
            census_thresholds: None,
            model: ModelSection::default(),
            estimator: d.estimator,
            grid: FactorGrid::default(),
        }
    }
}

/// A config resolved into what [`super::sweep_with`] takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub base: ExperimentSpec,
    pub grid: FactorGrid,
    pub epsilon_s: Option<f64>,
    pub census: Option<CensusConfig>,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EnfError::Config(e.to_string()))
    }

    /// Reads a config file; a relative reference path is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| EnfError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| EnfError::Config(format!("{}: {e}", path.display())))?;
        if cfg.reference != "synthetic" {
            let p = PathBuf::from(&cfg.reference);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.reference = dir.join(p).to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks settings that do not depend on the grid point.
    pub fn resolve(&self) -> Result<SweepOptions> {
        if self.epsilon_s.is_some() && self.epsilon_samples.is_some() {
            return Err(EnfError::Config(
                "set either `epsilon_s` or `epsilon_samples`, not both".into(),
            ));
        }
        if let Some(s) = self.epsilon_s {
            if !(s.is_finite() && s > 0.0) {
                return Err(EnfError::Config(format!("`epsilon_s` must be positive, got {s}")));
            }
        }
        let epsilon_s = match self.epsilon_samples {
            Some(_) => None,
            None => Some(self.epsilon_s.unwrap_or(DEFAULT_EPSILON_S)),
        };
        let model = Ar1Params::new(self.model.a, self.model.sigma_x)?;
        let census = match &self.census_thresholds {
            Some(t) => {
                let c = CensusConfig { thresholds: t.clone() };
                c.validate()?;
                Some(c)
            }
            None => None,
        };
        let reference = match self.reference.as_str() {
            "synthetic" => ReferenceSource::Synthetic,
            path => ReferenceSource::File(PathBuf::from(path)),
        };
        if self.scheme != Scheme::Waveform && reference != ReferenceSource::Synthetic {
            return Err(EnfError::Config(
                "a reference file applies to the waveform scheme only".into(),
            ));
        }
        let base = ExperimentSpec {
            scheme: self.scheme,
            l_t_s: self.l_t_s,
            l_r_s: self.l_r_s,
            delta_spp: self.delta_spp,
            snr_db: self.snr_db,
            epsilon_samples: self
                .epsilon_samples
                .unwrap_or_else(|| super::epsilon_for(epsilon_s.unwrap(), self.delta_spp)),
            metric: self.metric,
            trials: self.trials,
            master_seed: self.master_seed,
            model,
            estimator: self.estimator,
            sample_rate_hz: self.sample_rate_hz,
            nominal_hz: self.nominal_hz,
            frame_for_crlb: self.frame_for_crlb,
            reference,
            synth_resolution_spp: self.synth_resolution_spp,
            strategy: self.strategy,
        };
        Ok(SweepOptions {
            base,
            grid: self.grid.clone(),
            epsilon_s,
            census,
        })
    }
}

impl SweepOptions {
    /// Grid points that would be skipped, with reasons.
    pub fn invalid_points(&self) -> Vec<SkippedPoint> {
        self.grid
            .points(&self.base)
            .into_iter()
            .filter_map(|p| {
                spec_at(&self.base, &p, self.epsilon_s)
                    .validate()
                    .err()
                    .map(|e| SkippedPoint {
                        point: p,
                        reason: e.to_string(),
                    })
            })
            .collect()
    }
}
