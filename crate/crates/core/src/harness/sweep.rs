//! Cartesian sweeps over the four experimental factors.

use serde::{Deserialize, Serialize};

use super::{binomial_std_error, chance_level, epsilon_for, run, ExperimentSpec, Scheme, TrialResult};
use crate::error::Result;
use crate::matching::{Census, CensusConfig, MetricKind, HISTOGRAM_BINS};

/// Values per factor. An empty list keeps the base spec's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorGrid {
    pub l_t_s: Vec<f64>,
    pub l_r_s: Vec<f64>,
    pub delta_spp: Vec<f64>,
    pub snr_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub l_t_s: f64,
    pub l_r_s: f64,
    pub delta_spp: f64,
    pub snr_db: f64,
}

impl FactorGrid {
    /// All factor combinations, `l_t_s` varying slowest.
    pub fn points(&self, base: &ExperimentSpec) -> Vec<GridPoint> {
        let or_base = |v: &[f64], b: f64| if v.is_empty() { vec![b] } else { v.to_vec() };
        let lt = or_base(&self.l_t_s, base.l_t_s);
        let lr = or_base(&self.l_r_s, base.l_r_s);
        let dl = or_base(&self.delta_spp, base.delta_spp);
        let sn = or_base(&self.snr_db, base.snr_db);
        let mut out = Vec::with_capacity(lt.len() * lr.len() * dl.len() * sn.len());
        for &l_t_s in &lt {
            for &l_r_s in &lr {
                for &delta_spp in &dl {
                    for &snr_db in &sn {
                        out.push(GridPoint { l_t_s, l_r_s, delta_spp, snr_db });
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        [&self.l_t_s, &self.l_r_s, &self.delta_spp, &self.snr_db]
            .iter()
            .map(|v| v.len().max(1))
            .product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Spec for one grid point. With `epsilon_s` set, ε is recomputed from δ.
pub fn spec_at(base: &ExperimentSpec, p: &GridPoint, epsilon_s: Option<f64>) -> ExperimentSpec {
    ExperimentSpec {
        l_t_s: p.l_t_s,
        l_r_s: p.l_r_s,
        delta_spp: p.delta_spp,
        snr_db: p.snr_db,
        epsilon_samples: epsilon_s
            .map(|s| epsilon_for(s, p.delta_spp))
            .unwrap_or(base.epsilon_samples),
        ..base.clone()
    }
}

/// Census averaged over the trials of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub thresholds: Vec<f64>,
    /// Mean number of offsets at or above each threshold.
    pub mean_counts: Vec<f64>,
    /// Mean fraction of defined offsets per histogram bin.
    pub mean_histogram_fraction: Vec<f64>,
}

impl CensusSummary {
    pub fn from_censuses(c: &[Census]) -> Option<Self> {
        let first = c.first()?;
        let n = c.len() as f64;
        let mut mean_counts = vec![0.0; first.thresholds.len()];
        let mut mean_histogram_fraction = vec![0.0; HISTOGRAM_BINS];
        for census in c {
            for (m, &v) in mean_counts.iter_mut().zip(&census.counts) {
                *m += v as f64 / n;
            }
            let defined = (census.num_offsets - census.undefined).max(1) as f64;
            for (m, &v) in mean_histogram_fraction.iter_mut().zip(&census.histogram) {
                *m += v as f64 / defined / n;
            }
        }
        Some(Self {
            thresholds: first.thresholds.clone(),
            mean_counts,
            mean_histogram_fraction,
        })
    }
}

/// Aggregate outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: GridPoint,
    pub scheme: Scheme,
    pub backing: String,
    pub metric: MetricKind,
    pub epsilon_samples: usize,
    pub trials: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub std_error: f64,
    pub chance_level: f64,
    pub mean_abs_error_s: f64,
    pub census: Option<CensusSummary>,
    pub trial_results: Vec<TrialResult>,
}

impl PointReport {
    pub fn new(spec: &ExperimentSpec, trial_results: Vec<TrialResult>, census: Option<CensusSummary>) -> Self {
        let trials = trial_results.len();
        let successes = trial_results.iter().filter(|t| t.success).count();
        let accuracy = successes as f64 / trials as f64;
        let offsets = trial_results.first().map_or(1, |t| t.num_offsets);
        let mean_abs_error_s = trial_results
            .iter()
            .map(|t| t.abs_error_samples as f64 * spec.delta_spp)
            .sum::<f64>()
            / trials as f64;
        Self {
            point: GridPoint {
                l_t_s: spec.l_t_s,
                l_r_s: spec.l_r_s,
                delta_spp: spec.delta_spp,
                snr_db: spec.snr_db,
            },
            scheme: spec.scheme,
            backing: spec.backing_label(),
            metric: spec.metric,
            epsilon_samples: spec.epsilon_samples,
            trials,
            successes,
            accuracy,
            std_error: binomial_std_error(accuracy, trials),
            chance_level: chance_level(spec.epsilon_samples, offsets),
            mean_abs_error_s,
            census,
            trial_results,
        }
    }
}

/// A grid point that was not run, with the validation message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub point: GridPoint,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub points: Vec<PointReport>,
    pub skipped: Vec<SkippedPoint>,
}

/// Runs every valid grid point; invalid points are reported, not run.
pub fn sweep(base: &ExperimentSpec, grid: &FactorGrid) -> Result<AccuracyReport> {
    sweep_with(base, grid, None, None)
}

/// [`sweep`] with an ε rule in seconds and an optional per-trial census.
pub fn sweep_with(
    base: &ExperimentSpec,
    grid: &FactorGrid,
    epsilon_s: Option<f64>,
    census: Option<&CensusConfig>,
) -> Result<AccuracyReport> {
    if let Some(c) = census {
        c.validate()?;
    }
    let mut report = AccuracyReport::default();
    for p in grid.points(base) {
        let spec = spec_at(base, &p, epsilon_s);
        if let Err(e) = spec.validate() {
            report.skipped.push(SkippedPoint {
                point: p,
                reason: e.to_string(),
            });
            continue;
        }
        let out = run(&spec, census)?;
        let summary = CensusSummary::from_censuses(&out.census);
        report.points.push(PointReport::new(&spec, out.trials, summary));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_with_base_fallback() {
        let base = ExperimentSpec::default();
        let grid = FactorGrid {
            l_t_s: vec![60.0, 120.0],
            snr_db: vec![-30.0, -20.0, -10.0],
            ..Default::default()
        };
        let pts = grid.points(&base);
        assert_eq!(pts.len(), 6);
        assert_eq!(grid.len(), 6);
        assert!(pts.iter().all(|p| p.l_r_s == base.l_r_s && p.delta_spp == base.delta_spp));
        assert_eq!(pts[0].l_t_s, 60.0);
        assert_eq!(pts[0].snr_db, -30.0);
        assert_eq!(pts[5].l_t_s, 120.0);
        assert_eq!(pts[5].snr_db, -10.0);
    }

    #[test]
    fn invalid_points_are_skipped_and_reported() {
        let base = ExperimentSpec {
            l_r_s: 600.0,
            trials: 3,
            ..Default::default()
        };
        let grid = FactorGrid {
            l_t_s: vec![60.0, 1200.0],
            ..Default::default()
        };
        let r = sweep(&base, &grid).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].point.l_t_s, 1200.0);
    }

    #[test]
    fn epsilon_follows_delta() {
        let base = ExperimentSpec::default();
        let p = GridPoint { delta_spp: 5.0, ..GridPoint { l_t_s: 60.0, l_r_s: 600.0, delta_spp: 1.0, snr_db: 0.0 } };
        assert_eq!(spec_at(&base, &p, Some(10.0)).epsilon_samples, 2);
        assert_eq!(spec_at(&base, &p, None).epsilon_samples, base.epsilon_samples);
    }

    #[test]
    fn grid_point_results_do_not_depend_on_visit_order() {
        let base = ExperimentSpec {
            l_r_s: 900.0,
            trials: 4,
            ..Default::default()
        };
        let forward = FactorGrid { l_t_s: vec![60.0, 120.0], ..Default::default() };
        let backward = FactorGrid { l_t_s: vec![120.0, 60.0], ..Default::default() };
        let a = sweep(&base, &forward).unwrap();
        let b = sweep(&base, &backward).unwrap();
        assert_eq!(a.points[0].trial_results, b.points[1].trial_results);
        assert_eq!(a.points[1].trial_results, b.points[0].trial_results);
    }

    #[test]
    fn census_summary_averages() {
        let base = ExperimentSpec {
            l_r_s: 900.0,
            l_t_s: 60.0,
            trials: 2,
            ..Default::default()
        };
        let r = sweep_with(&base, &FactorGrid::default(), None, Some(&CensusConfig::default())).unwrap();
        let c = r.points[0].census.as_ref().unwrap();
        assert_eq!(c.mean_counts.len(), 3);
        // The true offset always correlates perfectly with the clean test.
        assert!(c.mean_counts[2] >= 1.0);
        let total: f64 = c.mean_histogram_fraction.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
