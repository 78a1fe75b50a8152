//! Noisy ENF synthesis, in the waveform domain and directly in the
//! frequency domain.
//!
//! The waveform path builds `s[n] = A[n] cos(2πT Σ_{i≤n} f[i] + φ)` and adds
//! white Gaussian noise at a requested SNR, leaving the noisy ENF to be
//! recovered by [`crate::estimation`]. The frequency-domain path skips both
//! the waveform and the estimator: it perturbs each ENF sample with Gaussian
//! noise whose variance is the Cramér-Rao bound for single-tone frequency
//! estimation over one analysis frame.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{EnfError, Result};
use crate::model::EnfSeries;
use crate::rng::rng_from_seed;

/// Relative tolerance used when comparing sampling intervals.
const RATE_TOLERANCE: f64 = 1e-9;

/// Time-amplitude waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct TadSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl TadSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(EnfError::param(
                "sample_rate_hz",
                format!("must be positive, got {sample_rate_hz}"),
            ));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(EnfError::param("samples", format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples.len() {
            return Err(EnfError::LengthMismatch(format!(
                "slice [{start}, {}) out of bounds for signal of {} samples",
                start + len,
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..start + len].to_vec(), self.sample_rate_hz)
    }
}

/// Waveform amplitude, constant or given per output sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Constant(f64),
    PerSample(Vec<f64>),
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Constant(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TadSynthesisParams {
    #[serde(default)]
    pub amplitude: Amplitude,
    #[serde(default)]
    pub initial_phase_rad: f64,
    pub sample_rate_hz: f64,
}

impl TadSynthesisParams {
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            amplitude: Amplitude::default(),
            initial_phase_rad: 0.0,
            sample_rate_hz,
        }
    }
}

/// Inputs of the frequency-domain noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfdNoiseParams {
    /// Linear SNR; `f64::INFINITY` means noise free.
    pub snr_linear: f64,
    /// Samples per analysis frame, `N_F`.
    pub frame_len_samples: usize,
    pub sample_rate_hz: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Builds `s[n] = A[n] cos(2πT Σ_{i=0..=n} f[i] + φ)` from an ENF given per
/// output sample.
///
/// The running phase is accumulated in cycles and wrapped to `[0, 1)` after
/// every step, so the cost is one addition per sample and the argument of
/// the cosine never grows large enough to lose precision.
pub fn synthesize_tad(enf: &EnfSeries, params: &TadSynthesisParams) -> Result<TadSignal> {
    let fs = params.sample_rate_hz;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(EnfError::param("sample_rate_hz", format!("must be positive, got {fs}")));
    }
    let period = 1.0 / fs;
    if ((enf.resolution_spp() - period) / period).abs() > RATE_TOLERANCE {
        return Err(EnfError::ResolutionMismatch(format!(
            "ENF resolution {} s does not match the sampling interval {} s; upsample the ENF first",
            enf.resolution_spp(),
            period
        )));
    }
    let n = enf.len();
    match &params.amplitude {
        Amplitude::Constant(a) if !(a.is_finite() && *a > 0.0) => {
            return Err(EnfError::param("amplitude", format!("must be > 0, got {a}")));
        }
        Amplitude::PerSample(v) => {
            if v.len() != n {
                return Err(EnfError::LengthMismatch(format!(
                    "{} amplitudes for {n} ENF samples",
                    v.len()
                )));
            }
            if let Some(i) = v.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(EnfError::param("amplitude", format!("A[{i}] must be > 0")));
            }
        }
        _ => {}
    }
    let phi = params.initial_phase_rad;
    let mut cycles = 0.0_f64;
    let mut samples = Vec::with_capacity(n);
    for (i, &f) in enf.samples().iter().enumerate() {
        cycles += f * period;
        cycles -= cycles.floor();
        let amp = match &params.amplitude {
            Amplitude::Constant(a) => *a,
            Amplitude::PerSample(v) => v[i],
        };
        samples.push(amp * (2.0 * PI * cycles + phi).cos());
    }
    TadSignal::new(samples, fs)
}

/// Zero-order-hold expansion of an ENF to `target_rate_hz` samples per second.
///
/// With an integer rate ratio each value is repeated exactly that many times.
/// Otherwise interval `i` receives `round((i+1)r) - round(i r)` samples, so
/// counts differ by at most one and the total duration is preserved to
/// within one output sample.
pub fn upsample_enf(enf: &EnfSeries, target_rate_hz: f64) -> Result<EnfSeries> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(EnfError::param("target_rate_hz", "must be positive"));
    }
    let ratio = target_rate_hz * enf.resolution_spp();
    if ratio < 1.0 - RATE_TOLERANCE {
        return Err(EnfError::param(
            "target_rate_hz",
            format!(
                "target rate {target_rate_hz} Hz is below the ENF rate {} Hz",
                enf.rate_hz()
            ),
        ));
    }
    let src = enf.samples();
    let rounded = ratio.round();
    let samples = if (ratio - rounded).abs() <= RATE_TOLERANCE * ratio {
        let reps = rounded as usize;
        let mut out = Vec::with_capacity(src.len() * reps);
        for &v in src {
            out.extend(std::iter::repeat_n(v, reps));
        }
        out
    } else {
        let mut out = Vec::with_capacity((src.len() as f64 * ratio).ceil() as usize);
        let mut prev_edge = 0usize;
        for (i, &v) in src.iter().enumerate() {
            let edge = ((i + 1) as f64 * ratio).round() as usize;
            out.extend(std::iter::repeat_n(v, edge - prev_edge));
            prev_edge = edge;
        }
        out
    };
    EnfSeries::new(samples, 1.0 / target_rate_hz, enf.nominal_hz())?
        .with_start_offset(enf.start_offset_s())
}

/// Adds white Gaussian noise so that the expected ratio of signal energy to
/// noise energy equals `snr_linear`.
///
/// The noise variance is computed from the realized signal energy,
/// `Σ s² / (N · snr)`. An infinite SNR returns the signal unchanged.
pub fn add_awgn(signal: &TadSignal, snr_linear: f64, seed: u64) -> Result<TadSignal> {
    if snr_linear.is_nan() || snr_linear <= 0.0 {
        return Err(EnfError::param("snr_linear", format!("must be > 0, got {snr_linear}")));
    }
    if signal.is_empty() {
        return Err(EnfError::EmptyInput("cannot add noise to an empty signal"));
    }
    let energy = signal.energy();
    if energy <= 0.0 {
        return Err(EnfError::DegenerateInput(
            "signal has zero energy, SNR is undefined".into(),
        ));
    }
    if snr_linear.is_infinite() {
        return Ok(signal.clone());
    }
    let sigma = (energy / (signal.len() as f64 * snr_linear)).sqrt();
    let mut rng = rng_from_seed(seed);
    let samples = signal
        .samples()
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s + sigma * z
        })
        .collect();
    TadSignal::new(samples, signal.sample_rate_hz())
}

/// Cramér-Rao bound on the variance (Hz²) of a single-tone frequency
/// estimate over one frame: `12 / (SNR · N_F (N_F² − 1)) · (f_S / 2π)²`.
pub fn crlb_frequency_variance(p: &TfdNoiseParams) -> Result<f64> {
    if p.frame_len_samples < 2 {
        return Err(EnfError::param(
            "frame_len_samples",
            format!("N_F must be at least 2, got {}", p.frame_len_samples),
        ));
    }
    if p.snr_linear.is_nan() || p.snr_linear <= 0.0 {
        return Err(EnfError::param("snr_linear", format!("must be > 0, got {}", p.snr_linear)));
    }
    if !(p.sample_rate_hz.is_finite() && p.sample_rate_hz > 0.0) {
        return Err(EnfError::param("sample_rate_hz", "must be positive"));
    }
    let n = p.frame_len_samples as f64;
    let scale = p.sample_rate_hz / (2.0 * PI);
    Ok(12.0 / (p.snr_linear * n * (n * n - 1.0)) * scale * scale)
}

/// Perturbs every ENF sample with i.i.d. `N(0, CRLB)` noise.
pub fn synthesize_noisy_enf_tfd(enf: &EnfSeries, p: &TfdNoiseParams, seed: u64) -> Result<EnfSeries> {
    let variance = crlb_frequency_variance(p)?;
    if variance == 0.0 {
        return Ok(enf.clone());
    }
    let sigma = variance.sqrt();
    let mut rng = rng_from_seed(seed);
    let samples = enf
        .samples()
        .iter()
        .map(|&f| {
            let z: f64 = StandardNormal.sample(&mut rng);
            f + sigma * z
        })
        .collect();
    enf.with_samples(samples)
}
