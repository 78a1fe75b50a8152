//! Seeded Monte Carlo reliability trials.
//!
//! Three procedures share one skeleton: build a reference, cut a test
//! segment at a random offset `k0`, degrade the test, match it back against
//! the reference and judge the result with the `|k̂ − k0| < ε` rule.
//!
//! * [`Scheme::Synthetic`] works on ENF sequences only: an AR(1) reference,
//!   with the test perturbed by Gaussian noise at the Cramér-Rao bound.
//! * [`Scheme::White`] is the same with an i.i.d. Gaussian reference.
//! * [`Scheme::Waveform`] works on waveforms: the test waveform receives
//!   white noise at the requested SNR and both sides go through the STFT
//!   frequency estimator before matching.
//!
//! All randomness of a trial comes from `hash(master_seed, grid_point_id,
//! trial_index)`, so results do not depend on thread count or on the order
//! in which grid points are visited.

mod config;
mod report;
mod sweep;

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EnfError, Result};
use crate::estimation::{estimate_if, frame_count, EstimatorConfig};
use crate::io;
use crate::matching::{decide, CensusConfig, Census, MatchConfig, Matcher, MetricKind, Strategy};
use crate::model::{fit_ar1, synthesize_ar1, Ar1Params, EnfSeries};
use crate::rng::{derive_seed, rng_from_seed, tag};
use crate::synthesis::{
    add_awgn, db_to_linear, synthesize_noisy_enf_tfd, synthesize_tad, upsample_enf, TadSignal,
    TadSynthesisParams, TfdNoiseParams,
};

pub use config::{SweepConfig, SweepOptions};
pub use report::{write_gnuplot_files, write_report_csv, write_trials_csv};
pub use sweep::{sweep, sweep_with, AccuracyReport, CensusSummary, FactorGrid, GridPoint, PointReport, SkippedPoint};

/// Innovation standard deviation (Hz) used when none is configured.
pub const DEFAULT_SIGMA_X: f64 = 0.007;
/// AR(1) coefficient used for synthetic references.
pub const DEFAULT_AR_COEFFICIENT: f64 = 0.99;
/// Match tolerance in seconds, `ε·δ`.
pub const DEFAULT_EPSILON_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Synthetic,
    Waveform,
    #[serde(alias = "white_gaussian", alias = "whitegaussian")]
    White,
}

impl Scheme {
    fn code(self) -> u64 {
        match self {
            Scheme::Synthetic => 1,
            Scheme::Waveform => 2,
            Scheme::White => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Synthetic => "synthetic",
            Scheme::Waveform => "waveform",
            Scheme::White => "white",
        }
    }
}

/// Where a waveform-scheme reference comes from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// AR(1) ENF, hold-upsampled and rendered as a cosine.
    #[default]
    Synthetic,
    /// WAV or ENFT waveform on disk.
    File(PathBuf),
}

impl ReferenceSource {
    pub fn label(&self) -> String {
        match self {
            ReferenceSource::Synthetic => "synthetic".into(),
            ReferenceSource::File(p) => format!("file:{}", p.display()),
        }
    }
}

/// Factor assignment and fixed settings of one batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    /// Test length in seconds.
    pub l_t_s: f64,
    /// Reference length (match scope) in seconds.
    pub l_r_s: f64,
    pub delta_spp: f64,
    /// SNR in dB; `f64::INFINITY` is noise free.
    pub snr_db: f64,
    pub epsilon_samples: usize,
    pub metric: MetricKind,
    pub trials: usize,
    pub master_seed: u64,
    pub model: Ar1Params,
    /// Waveform scheme only. `step_s` is overridden by `delta_spp`.
    pub estimator: EstimatorConfig,
    pub sample_rate_hz: f64,
    pub nominal_hz: f64,
    /// Frame length `N_F` of the noise model, synthetic and white schemes.
    pub frame_for_crlb: usize,
    /// Waveform scheme only.
    pub reference: ReferenceSource,
    /// Resolution of the AR(1) ENF behind a synthetic waveform reference.
    pub synth_resolution_spp: f64,
    pub strategy: Strategy,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::Synthetic,
            l_t_s: 300.0,
            l_r_s: 168.0 * 3600.0,
            delta_spp: 1.0,
            snr_db: -25.0,
            epsilon_samples: 10,
            metric: MetricKind::Cc,
            trials: 100,
            master_seed: 0,
            model: Ar1Params {
                a: DEFAULT_AR_COEFFICIENT,
                sigma_x: DEFAULT_SIGMA_X,
            },
            estimator: EstimatorConfig::default(),
            sample_rate_hz: 400.0,
            nominal_hz: 50.0,
            frame_for_crlb: 6400,
            reference: ReferenceSource::Synthetic,
            synth_resolution_spp: 1.0,
            strategy: Strategy::Auto,
        }
    }
}

/// `max(1, round(seconds / δ))`.
pub fn epsilon_for(seconds: f64, delta_spp: f64) -> usize {
    ((seconds / delta_spp).round() as usize).max(1)
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(EnfError::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("l_t_s", self.l_t_s)?;
        positive("l_r_s", self.l_r_s)?;
        positive("delta_spp", self.delta_spp)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        if self.l_t_s > self.l_r_s {
            return Err(EnfError::param(
                "l_t_s",
                format!("test length {} s exceeds reference length {} s", self.l_t_s, self.l_r_s),
            ));
        }
        if 1.0 / self.delta_spp > self.sample_rate_hz * (1.0 + 1e-12) {
            return Err(EnfError::param(
                "delta_spp",
                format!(
                    "ENF rate 1/δ = {} Hz exceeds the sampling rate {} Hz",
                    1.0 / self.delta_spp,
                    self.sample_rate_hz
                ),
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(EnfError::param("snr_db", "must be a number or +inf"));
        }
        if self.epsilon_samples == 0 {
            return Err(EnfError::param("epsilon_samples", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(EnfError::param("trials", "must be at least 1"));
        }
        self.model.validate()?;
        if !self.nominal_hz.is_finite() {
            return Err(EnfError::param("nominal_hz", "must be finite"));
        }
        match self.scheme {
            Scheme::Synthetic | Scheme::White => {
                if self.frame_for_crlb < 2 {
                    return Err(EnfError::param("frame_for_crlb", "N_F must be at least 2"));
                }
                if self.test_samples() < 2 {
                    return Err(EnfError::param("l_t_s", "test must span at least 2 ENF samples"));
                }
            }
            Scheme::Waveform => {
                positive("synth_resolution_spp", self.synth_resolution_spp)?;
                let cfg = self.waveform_estimator();
                cfg.validate(self.sample_rate_hz)?;
                let frames = frame_count(
                    (self.l_t_s * self.sample_rate_hz).round() as usize,
                    cfg.frame_len_samples(self.sample_rate_hz),
                    cfg.hop_samples(self.sample_rate_hz),
                );
                if frames < 2 {
                    return Err(EnfError::param(
                        "l_t_s",
                        "test waveform must hold at least 2 estimator frames",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Test length in ENF samples for the ENF-domain schemes.
    pub fn test_samples(&self) -> usize {
        (self.l_t_s / self.delta_spp).round() as usize
    }

    pub fn reference_samples(&self) -> usize {
        (self.l_r_s / self.delta_spp).round() as usize
    }

    pub fn snr_linear(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    /// Estimator settings of the waveform scheme: hop δ, band around nominal.
    pub fn waveform_estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            step_s: self.delta_spp,
            band_center_hz: self.nominal_hz,
            ..self.estimator
        }
    }

    /// Identifier of the factor assignment; depends on values only.
    pub fn grid_point_id(&self) -> u64 {
        derive_seed(
            self.scheme.code(),
            &[
                self.l_t_s.to_bits(),
                self.l_r_s.to_bits(),
                self.delta_spp.to_bits(),
                self.snr_db.to_bits(),
            ],
        )
    }

    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[tag::TRIAL, self.grid_point_id(), trial_index as u64],
        )
    }

    pub fn backing_label(&self) -> String {
        match self.scheme {
            Scheme::Synthetic => "ar1".into(),
            Scheme::White => "white".into(),
            Scheme::Waveform => self.reference.label(),
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: usize,
    pub k0: usize,
    pub k_hat: usize,
    pub abs_error_samples: usize,
    pub success: bool,
    pub best_metric_value: f64,
    pub num_offsets: usize,
}

/// Trials plus, when requested, the noise-free census of each trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trials: Vec<TrialResult>,
    pub census: Vec<Census>,
}

/// Success probability when `k̂` and `k0` are independent and uniform over
/// `M` offsets: `(M(2ε − 1) − ε(ε − 1)) / M²`, about `(2ε − 1) / M`.
pub fn chance_level(epsilon_samples: usize, num_offsets: usize) -> f64 {
    let m = num_offsets as f64;
    let e = epsilon_samples.min(num_offsets) as f64;
    (m * (2.0 * e - 1.0) - e * (e - 1.0)) / (m * m)
}

/// Binomial standard error of a success rate `p` over `n` trials.
pub fn binomial_std_error(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn accuracy(trials: &[TrialResult]) -> f64 {
    trials.iter().filter(|t| t.success).count() as f64 / trials.len() as f64
}

/// Scheme 1: AR(1) reference, CRLB-perturbed test.
pub fn run_scheme1(spec: &ExperimentSpec) -> Result<Vec<TrialResult>> {
    expect_scheme(spec, Scheme::Synthetic)?;
    Ok(run_enf_domain(spec, None)?.trials)
}

/// White-Gaussian benchmark: as Scheme 1 with an i.i.d. reference of
/// standard deviation `model.sigma_x`.
pub fn run_white_benchmark(spec: &ExperimentSpec) -> Result<Vec<TrialResult>> {
    expect_scheme(spec, Scheme::White)?;
    Ok(run_enf_domain(spec, None)?.trials)
}

/// Scheme 2: waveform reference, noisy test waveform, STFT estimation.
pub fn run_scheme2(spec: &ExperimentSpec) -> Result<Vec<TrialResult>> {
    expect_scheme(spec, Scheme::Waveform)?;
    Ok(run_waveform(spec, None)?.trials)
}

/// Runs whichever procedure `spec.scheme` names, optionally with a census
/// of the noise-free test against the reference in every trial.
pub fn run(spec: &ExperimentSpec, census: Option<&CensusConfig>) -> Result<RunOutput> {
    if let Some(c) = census {
        c.validate()?;
    }
    match spec.scheme {
        Scheme::Synthetic | Scheme::White => run_enf_domain(spec, census),
        Scheme::Waveform => run_waveform(spec, census),
    }
}

fn expect_scheme(spec: &ExperimentSpec, scheme: Scheme) -> Result<()> {
    if spec.scheme != scheme {
        return Err(EnfError::param(
            "scheme",
            format!("expected {}, got {}", scheme.name(), spec.scheme.name()),
        ));
    }
    Ok(())
}

/// Reference ENF for the ENF-domain schemes.
fn enf_reference(spec: &ExperimentSpec, seed: u64) -> Result<EnfSeries> {
    let params = match spec.scheme {
        Scheme::White => Ar1Params::new(0.0, spec.model.sigma_x)?,
        _ => spec.model,
    };
    synthesize_ar1(spec.reference_samples(), params, spec.delta_spp, spec.nominal_hz, seed)
}

fn run_enf_domain(spec: &ExperimentSpec, census: Option<&CensusConfig>) -> Result<RunOutput> {
    spec.validate()?;
    let n_test = spec.test_samples();
    let n_ref = spec.reference_samples();
    let noise = TfdNoiseParams {
        snr_linear: spec.snr_linear(),
        frame_len_samples: spec.frame_for_crlb,
        sample_rate_hz: spec.sample_rate_hz,
    };
    let matcher = Matcher::new(spec.strategy);
    let cfg = MatchConfig {
        epsilon_samples: spec.epsilon_samples,
        ground_truth_k0: None,
    };
    let results = (0..spec.trials)
        .into_par_iter()
        .map(|i| -> Result<(TrialResult, Option<Census>)> {
            let seed = spec.trial_seed(i);
            let reference = enf_reference(spec, derive_seed(seed, &[tag::REFERENCE]))?;
            let k0 = rng_from_seed(derive_seed(seed, &[tag::OFFSET])).random_range(0..=n_ref - n_test);
            let clean = reference.slice(k0, n_test)?;
            let test = synthesize_noisy_enf_tfd(&clean, &noise, derive_seed(seed, &[tag::NOISE]))?;
            let outcome = matcher.scan(spec.metric, &test, &reference)?;
            let d = decide(&outcome, &MatchConfig { ground_truth_k0: Some(k0), ..cfg })?;
            let census = census
                .map(|c| matcher.census(&clean, &reference, c))
                .transpose()?;
            Ok((
                TrialResult {
                    trial_index: i,
                    k0,
                    k_hat: outcome.k_hat,
                    abs_error_samples: d.abs_error_samples,
                    success: d.success,
                    best_metric_value: outcome.best_value,
                    num_offsets: outcome.num_offsets,
                },
                census,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(split(results))
}

fn split(results: Vec<(TrialResult, Option<Census>)>) -> RunOutput {
    let mut out = RunOutput {
        trials: Vec::with_capacity(results.len()),
        census: Vec::new(),
    };
    for (t, c) in results {
        out.trials.push(t);
        out.census.extend(c);
    }
    out
}

/// Reference waveform for the waveform scheme, exactly `round(L_R·f_S)`
/// samples long.
pub fn waveform_reference(spec: &ExperimentSpec) -> Result<TadSignal> {
    let fs = spec.sample_rate_hz;
    let needed = (spec.l_r_s * fs).round() as usize;
    match &spec.reference {
        ReferenceSource::Synthetic => {
            let seed = derive_seed(spec.master_seed, &[tag::REFERENCE, spec.grid_point_id()]);
            let res = spec.synth_resolution_spp;
            let n_enf = (spec.l_r_s / res).ceil() as usize + 1;
            let enf = synthesize_ar1(n_enf, spec.model, res, spec.nominal_hz, seed)?;
            let per_sample = upsample_enf(&enf, fs)?;
            let full = synthesize_tad(&per_sample, &TadSynthesisParams::new(fs))?;
            full.slice(0, needed)
        }
        ReferenceSource::File(path) => {
            let tad = io::read_tad(path)?;
            if (tad.sample_rate_hz() - fs).abs() > 1e-9 * fs {
                return Err(EnfError::param(
                    "sample_rate_hz",
                    format!(
                        "reference file is sampled at {} Hz, experiment expects {fs} Hz",
                        tad.sample_rate_hz()
                    ),
                ));
            }
            if tad.len() < needed {
                return Err(EnfError::LengthMismatch(format!(
                    "reference file holds {} s, experiment needs L_R = {} s",
                    tad.duration_s(),
                    spec.l_r_s
                )));
            }
            tad.slice(0, needed)
        }
    }
}

/// Reference offset `k0` (in ENF samples) of a test recording that starts
/// `start_s` seconds into the reference: the reference frame whose centre
/// is nearest to the centre of the test's first frame.
pub fn ground_truth_offset(start_s: f64, frame_len_s: f64, delta_spp: f64) -> usize {
    let test_center = start_s + frame_len_s / 2.0;
    ((test_center - frame_len_s / 2.0) / delta_spp).round() as usize
}

fn run_waveform(spec: &ExperimentSpec, census: Option<&CensusConfig>) -> Result<RunOutput> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let cfg = spec.waveform_estimator();
    let hop = cfg.hop_samples(fs);
    let reference_tad = waveform_reference(spec)?;
    // The reference plays the role of a fixed database: it is estimated once
    // and every trial draws its test segment from it.
    let reference = estimate_if(&reference_tad, &cfg)?;
    let n_test = (spec.l_t_s * fs).round() as usize;
    // Test segments start on the reference's hop grid.
    let max_start_frame = (reference_tad.len() - n_test) / hop;
    let matcher = Matcher::new(spec.strategy);
    let snr = spec.snr_linear();

    let results = (0..spec.trials)
        .map(|i| -> Result<(TrialResult, Option<Census>)> {
            let seed = spec.trial_seed(i);
            let start_frame =
                rng_from_seed(derive_seed(seed, &[tag::OFFSET])).random_range(0..=max_start_frame);
            let start_sample = start_frame * hop;
            let clean = reference_tad.slice(start_sample, n_test)?;
            let k0 = ground_truth_offset(start_sample as f64 / fs, cfg.frame_len_s, hop as f64 / fs);
            let noisy = add_awgn(&clean, snr, derive_seed(seed, &[tag::NOISE]))?;
            let test = estimate_if(&noisy, &cfg)?;
            let outcome = matcher.scan(spec.metric, &test, &reference)?;
            let d = decide(
                &outcome,
                &MatchConfig {
                    epsilon_samples: spec.epsilon_samples,
                    ground_truth_k0: Some(k0),
                },
            )?;
            let census = match census {
                Some(c) => Some(matcher.census(&estimate_if(&clean, &cfg)?, &reference, c)?),
                None => None,
            };
            Ok((
                TrialResult {
                    trial_index: i,
                    k0,
                    k_hat: outcome.k_hat,
                    abs_error_samples: d.abs_error_samples,
                    success: d.success,
                    best_metric_value: outcome.best_value,
                    num_offsets: outcome.num_offsets,
                },
                census,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(split(results))
}

/// Mean fitted AR(1) coefficient after decimating a fine synthetic ENF.
///
/// Each realization synthesizes `segment_samples` points at 1 s per point
/// (after a 1000-sample burn-in), decimates by every factor in `factors`
/// and refits; the returned values are averages over realizations.
pub fn a_versus_delta(
    model: Ar1Params,
    factors: &[usize],
    segment_samples: usize,
    realizations: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    const BURN_IN: usize = 1000;
    if realizations == 0 {
        return Err(EnfError::param("realizations", "must be at least 1"));
    }
    let sums = (0..realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let full = synthesize_ar1(
                segment_samples + BURN_IN,
                model,
                1.0,
                0.0,
                derive_seed(seed, &[r as u64]),
            )?;
            let fine = full.slice(BURN_IN, segment_samples)?;
            factors
                .iter()
                .map(|&f| fit_ar1(&fine.decimate(f)?).map(|p| p.a))
                .collect()
        })
        .try_reduce(
            || vec![0.0; factors.len()],
            |mut acc, v| {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
                Ok(acc)
            },
        )?;
    Ok(factors
        .iter()
        .zip(sums)
        .map(|(&f, s)| (f, s / realizations as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(scheme: Scheme) -> ExperimentSpec {
        ExperimentSpec {
            scheme,
            l_t_s: 120.0,
            l_r_s: 3600.0,
            trials: 8,
            master_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn validation_catches_bad_factors() {
        let ok = small_spec(Scheme::Synthetic);
        assert!(ok.validate().is_ok());
        assert!(ExperimentSpec { l_t_s: 7200.0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentSpec { delta_spp: 0.001, ..ok.clone() }.validate().is_err());
        assert!(ExperimentSpec { trials: 0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentSpec { epsilon_samples: 0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentSpec { snr_db: f64::NAN, ..ok.clone() }.validate().is_err());
        assert!(ExperimentSpec { frame_for_crlb: 1, ..ok.clone() }.validate().is_err());
        let wave = ExperimentSpec { l_t_s: 16.5, ..small_spec(Scheme::Waveform) };
        assert!(wave.validate().is_err());
    }

    #[test]
    fn wrong_scheme_rejected() {
        let spec = small_spec(Scheme::White);
        assert!(run_scheme1(&spec).is_err());
        assert!(run_scheme2(&spec).is_err());
        assert!(run_white_benchmark(&spec).is_ok());
    }

    #[test]
    fn invalid_spec_fails_before_any_trial() {
        let spec = ExperimentSpec { l_t_s: 1e9, ..small_spec(Scheme::Synthetic) };
        assert!(matches!(run_scheme1(&spec), Err(EnfError::InvalidParameter { .. })));
    }

    #[test]
    fn noise_free_scheme1_is_exact() {
        let spec = ExperimentSpec {
            snr_db: f64::INFINITY,
            metric: MetricKind::Mse,
            ..small_spec(Scheme::Synthetic)
        };
        for t in run_scheme1(&spec).unwrap() {
            assert!(t.success);
            assert_eq!(t.k_hat, t.k0);
            assert_eq!(t.best_metric_value, 0.0);
        }
    }

    #[test]
    fn trials_are_reproducible_and_distinct() {
        let spec = small_spec(Scheme::Synthetic);
        let a = run_scheme1(&spec).unwrap();
        assert_eq!(a, run_scheme1(&spec).unwrap());
        let other = run_scheme1(&ExperimentSpec { master_seed: 6, ..spec }).unwrap();
        assert_ne!(a, other);
        let k0s: std::collections::HashSet<_> = a.iter().map(|t| t.k0).collect();
        assert!(k0s.len() > 1);
    }

    #[test]
    fn epsilon_from_seconds() {
        assert_eq!(epsilon_for(10.0, 1.0), 10);
        assert_eq!(epsilon_for(10.0, 0.5), 20);
        assert_eq!(epsilon_for(10.0, 10.0), 1);
        assert_eq!(epsilon_for(10.0, 40.0), 1);
    }

    #[test]
    fn ground_truth_uses_frame_centres() {
        assert_eq!(ground_truth_offset(0.0, 16.0, 1.0), 0);
        assert_eq!(ground_truth_offset(120.0, 16.0, 1.0), 120);
        assert_eq!(ground_truth_offset(120.0, 16.0, 0.5), 240);
        assert_eq!(ground_truth_offset(25.0, 16.0, 5.0), 5);
    }

    #[test]
    fn chance_level_formula() {
        assert_eq!(chance_level(10, 1900), (1900.0 * 19.0 - 90.0) / (1900.0 * 1900.0));
        assert_eq!(chance_level(10, 5), 1.0);
        // Brute-force count over all (k̂, k0) pairs.
        let (m, eps) = (37usize, 4usize);
        let hits = (0..m)
            .flat_map(|a| (0..m).map(move |b| a.abs_diff(b) < eps))
            .filter(|&h| h)
            .count();
        assert!((chance_level(eps, m) - hits as f64 / (m * m) as f64).abs() < 1e-15);
    }

    #[test]
    fn noise_free_waveform_scheme_is_exact() {
        let spec = ExperimentSpec {
            l_t_s: 120.0,
            l_r_s: 1200.0,
            snr_db: f64::INFINITY,
            trials: 4,
            ..small_spec(Scheme::Waveform)
        };
        for t in run_scheme2(&spec).unwrap() {
            assert!(t.success, "{t:?}");
            assert_eq!(t.k_hat, t.k0);
        }
    }
}
