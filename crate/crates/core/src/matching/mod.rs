//! Sliding a test ENF across a reference ENF.
//!
//! Two metrics are supported: the sum of squared differences (minimized) and
//! the Pearson correlation coefficient with per-window mean removal
//! (maximized). Both can be evaluated offset by offset or, for long scans,
//! with an FFT fast path. The fast path only ranks offsets: every offset
//! whose fast value lies within the fast path's error bound of the optimum
//! is re-evaluated exactly, so the reported optimum, its value and the
//! smallest-index tie rule are the same as with direct evaluation.

mod direct;
mod fft;

use serde::{Deserialize, Serialize};

use crate::error::{EnfError, Result};
use crate::model::EnfSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mse,
    #[default]
    Cc,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricKind::Mse => "mse",
            MetricKind::Cc => "cc",
        })
    }
}

impl std::str::FromStr for MetricKind {
    type Err = EnfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(MetricKind::Mse),
            "cc" => Ok(MetricKind::Cc),
            other => Err(EnfError::param("metric", format!("expected `mse` or `cc`, got `{other}`"))),
        }
    }
}

/// Result of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub k_hat: usize,
    pub metric_kind: MetricKind,
    pub best_value: f64,
    /// Metric value per offset. For CC, offsets whose reference window is
    /// flat hold `NaN` and never win.
    pub trace: Vec<f64>,
    pub num_offsets: usize,
    pub resolution_spp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Tolerance ε in samples; a match succeeds when `|k̂ − k0| < ε`.
    pub epsilon_samples: usize,
    pub ground_truth_k0: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub success: bool,
    pub abs_error_samples: usize,
    pub abs_error_s: f64,
}

/// How the per-offset metric values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Direct below a work threshold, FFT above it.
    #[default]
    Auto,
    Direct,
    Fft,
}

/// Work (`offsets × test length`) above which `Auto` switches to the FFT path.
const AUTO_FFT_WORK: usize = 1 << 22;
const AUTO_FFT_MIN_TEST: usize = 16;

impl Strategy {
    fn use_fft(self, test_len: usize, offsets: usize) -> bool {
        match self {
            Strategy::Direct => false,
            Strategy::Fft => true,
            Strategy::Auto => {
                test_len >= AUTO_FFT_MIN_TEST && offsets.saturating_mul(test_len) >= AUTO_FFT_WORK
            }
        }
    }
}

/// Scanner with a fixed evaluation strategy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Matcher {
    pub strategy: Strategy,
}

impl Matcher {
    pub fn new(strategy: Strategy) -> Self {
        Self { strategy }
    }

    pub fn scan(&self, kind: MetricKind, test: &EnfSeries, reference: &EnfSeries) -> Result<MatchOutcome> {
        match kind {
            MetricKind::Mse => self.mse(test, reference),
            MetricKind::Cc => self.cc(test, reference),
        }
    }

    pub fn mse(&self, test: &EnfSeries, reference: &EnfSeries) -> Result<MatchOutcome> {
        check_pair(test, reference)?;
        let (t, r) = (test.samples(), reference.samples());
        let offsets = r.len() - t.len() + 1;
        let trace = if self.strategy.use_fft(t.len(), offsets) {
            mse_trace_fft(t, r)
        } else {
            direct::mse_trace(t, r)
        };
        let k_hat = select(&trace, MetricKind::Mse).expect("MSE trace has no NaN");
        Ok(MatchOutcome {
            k_hat,
            metric_kind: MetricKind::Mse,
            best_value: trace[k_hat],
            trace,
            num_offsets: offsets,
            resolution_spp: reference.resolution_spp(),
        })
    }

    pub fn cc(&self, test: &EnfSeries, reference: &EnfSeries) -> Result<MatchOutcome> {
        check_pair(test, reference)?;
        let (t, r) = (test.samples(), reference.samples());
        check_test_variance(t)?;
        let offsets = r.len() - t.len() + 1;
        let centered = direct::CenteredTest::new(t);
        let runs = direct::run_lengths(r);
        let trace = if self.strategy.use_fft(t.len(), offsets) {
            cc_trace_fft(&centered, r, &runs)
        } else {
            direct::cc_trace(&centered, r, &runs)
        };
        let k_hat = select(&trace, MetricKind::Cc).ok_or_else(|| {
            EnfError::NoValidOffset("every reference window has zero variance".into())
        })?;
        Ok(MatchOutcome {
            k_hat,
            metric_kind: MetricKind::Cc,
            best_value: trace[k_hat],
            trace,
            num_offsets: offsets,
            resolution_spp: reference.resolution_spp(),
        })
    }

    pub fn census(&self, test: &EnfSeries, reference: &EnfSeries, cfg: &CensusConfig) -> Result<Census> {
        cfg.validate()?;
        let outcome = self.cc(test, reference)?;
        Ok(Census::from_trace(&outcome.trace, &cfg.thresholds))
    }
}

fn check_pair(test: &EnfSeries, reference: &EnfSeries) -> Result<()> {
    let (dt, dr) = (test.resolution_spp(), reference.resolution_spp());
    if ((dt - dr) / dr).abs() > 1e-9 {
        return Err(EnfError::ResolutionMismatch(format!(
            "test resolution {dt} s differs from reference resolution {dr} s"
        )));
    }
    if (test.nominal_hz() - reference.nominal_hz()).abs() > 1e-9 {
        return Err(EnfError::param(
            "nominal_hz",
            format!(
                "test nominal {} Hz differs from reference nominal {} Hz",
                test.nominal_hz(),
                reference.nominal_hz()
            ),
        ));
    }
    if test.len() > reference.len() {
        return Err(EnfError::LengthMismatch(format!(
            "test of {} samples is longer than reference of {} samples",
            test.len(),
            reference.len()
        )));
    }
    Ok(())
}

fn check_test_variance(t: &[f64]) -> Result<()> {
    if t.iter().all(|&v| v == t[0]) {
        return Err(EnfError::DegenerateInput(
            "test series has zero variance; correlation is undefined".into(),
        ));
    }
    Ok(())
}

/// Optimal offset under `kind`, smallest index on exact ties, `NaN` skipped.
fn select(trace: &[f64], kind: MetricKind) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in trace.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let better = match (best, kind) {
            (None, _) => true,
            (Some((_, b)), MetricKind::Mse) => v < b,
            (Some((_, b)), MetricKind::Cc) => v > b,
        };
        if better {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

fn mse_trace_fft(t: &[f64], r: &[f64]) -> Vec<f64> {
    let len = t.len();
    // Shifting both series by the same constant leaves every difference, and
    // so the trace, unchanged; it keeps the sums away from 50² cancellation.
    let shift = r.iter().sum::<f64>() / r.len() as f64;
    let tc: Vec<f64> = t.iter().map(|v| v - shift).collect();
    let rc: Vec<f64> = r.iter().map(|v| v - shift).collect();
    let cross = fft::sliding_dot(&tc, &rc);
    let (_, s2) = fft::window_sums(&rc, len);
    let stt: f64 = tc.iter().map(|v| v * v).sum();
    let mut trace: Vec<f64> = cross
        .iter()
        .zip(&s2)
        .map(|(x, w)| stt - 2.0 * x + w)
        .collect();

    let scale = stt + s2.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * scale + f64::MIN_POSITIVE;
    let floor = trace.iter().cloned().fold(f64::INFINITY, f64::min);
    for (k, v) in trace.iter_mut().enumerate() {
        if *v <= floor + 2.0 * tol {
            *v = direct::sse_at(t, r, k);
        }
    }
    trace
}

fn cc_trace_fft(test: &direct::CenteredTest, r: &[f64], runs: &[usize]) -> Vec<f64> {
    let len = test.values.len();
    let shift = r.iter().sum::<f64>() / r.len() as f64;
    let rc: Vec<f64> = r.iter().map(|v| v - shift).collect();
    let cross = fft::sliding_dot(&test.values, &rc);
    let (s1, s2) = fft::window_sums(&rc, len);
    let inv_len = 1.0 / len as f64;
    // The centred test sums to zero only up to rounding; the direct formula
    // removes each window's mean, so take that residue back out here.
    let test_sum: f64 = test.values.iter().sum();
    let mut trace: Vec<f64> = (0..cross.len())
        .map(|k| {
            if runs[k] >= len {
                return f64::NAN;
            }
            let srr = s2[k] - s1[k] * s1[k] * inv_len;
            if srr <= 1e-6 * s2[k] {
                // Too much cancellation in the window sums for this window.
                direct::cc_at(test, r, k)
            } else {
                (cross[k] - s1[k] * inv_len * test_sum) / (test.energy * srr).sqrt()
            }
        })
        .collect();

    const TOL: f64 = 1e-7;
    let ceiling = trace
        .iter()
        .filter(|v| !v.is_nan())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    for (k, v) in trace.iter_mut().enumerate() {
        if !v.is_nan() && *v >= ceiling - 2.0 * TOL {
            *v = direct::cc_at(test, r, k);
        }
    }
    trace
}

/// Sum of squared differences at every offset; `k̂` is the smallest-index minimum.
pub fn match_mse(test: &EnfSeries, reference: &EnfSeries) -> Result<MatchOutcome> {
    Matcher::default().mse(test, reference)
}

/// Pearson correlation at every offset; `k̂` is the smallest-index maximum.
pub fn match_cc(test: &EnfSeries, reference: &EnfSeries) -> Result<MatchOutcome> {
    Matcher::default().cc(test, reference)
}

/// Applies the tolerance rule `|k̂ − k0| < ε`.
pub fn decide(outcome: &MatchOutcome, cfg: &MatchConfig) -> Result<Decision> {
    let k0 = cfg.ground_truth_k0.ok_or(EnfError::MissingGroundTruth)?;
    if cfg.epsilon_samples == 0 {
        return Err(EnfError::param("epsilon_samples", "must be at least 1"));
    }
    let err = outcome.k_hat.abs_diff(k0);
    Ok(Decision {
        success: err < cfg.epsilon_samples,
        abs_error_samples: err,
        abs_error_s: err as f64 * outcome.resolution_spp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub thresholds: Vec<f64>,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.8, 0.9, 0.99],
        }
    }
}

impl CensusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(EnfError::param("thresholds", "need at least one threshold"));
        }
        if self.thresholds.iter().any(|&t| !(t > -1.0 && t <= 1.0)) {
            return Err(EnfError::param("thresholds", "thresholds must lie in (-1, 1]"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EnfError::param("thresholds", "thresholds must be strictly increasing"));
        }
        Ok(())
    }
}

/// Number of histogram bins of width 0.1 over [-1, 1].
pub const HISTOGRAM_BINS: usize = 20;

/// Counts of reference offsets by correlation value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub thresholds: Vec<f64>,
    /// Offsets with `CC >= threshold`, one entry per threshold.
    pub counts: Vec<usize>,
    /// Bin `i` covers `[-1 + 0.1 i, -1 + 0.1 (i + 1))`; the last bin also
    /// holds `CC = 1`.
    pub histogram: Vec<usize>,
    /// Offsets with a flat reference window.
    pub undefined: usize,
    pub num_offsets: usize,
}

impl Census {
    pub fn from_trace(trace: &[f64], thresholds: &[f64]) -> Self {
        let mut counts = vec![0; thresholds.len()];
        let mut histogram = vec![0; HISTOGRAM_BINS];
        let mut undefined = 0;
        for &cc in trace {
            if cc.is_nan() {
                undefined += 1;
                continue;
            }
            for (count, &th) in counts.iter_mut().zip(thresholds) {
                if cc >= th {
                    *count += 1;
                }
            }
            histogram[histogram_bin(cc)] += 1;
        }
        Self {
            thresholds: thresholds.to_vec(),
            counts,
            histogram,
            undefined,
            num_offsets: trace.len(),
        }
    }

    /// Lower edge of histogram bin `i`.
    pub fn bin_lower_edge(i: usize) -> f64 {
        -1.0 + 0.1 * i as f64
    }
}

fn histogram_bin(cc: f64) -> usize {
    (((cc + 1.0) * 10.0).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Counts offsets whose correlation with the test meets each threshold.
pub fn census_similar(test: &EnfSeries, reference: &EnfSeries, cfg: &CensusConfig) -> Result<Census> {
    Matcher::default().census(test, reference, cfg)
}
