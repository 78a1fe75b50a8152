//! First-order autoregressive ENF model.
//!
//! The mean-removed ENF is treated as `f[n] = a f[n-1] + x[n]` with a white
//! Gaussian innovation `x[n]`. This module synthesizes such sequences, fits
//! `a` back from data through the order-1 Yule-Walker (Levinson-Durbin)
//! solution, and computes the periodogram used to characterize how little
//! energy the ENF carries above a few hundredths of a hertz.

use rand_distr::{Distribution, StandardNormal};
use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{EnfError, Result};
use crate::rng::rng_from_seed;

/// Uniformly sampled instantaneous-frequency sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnfSeries {
    samples: Vec<f64>,
    resolution_spp: f64,
    nominal_hz: f64,
    start_offset_s: f64,
}

impl EnfSeries {
    /// Builds a series starting at offset zero.
    pub fn new(samples: Vec<f64>, resolution_spp: f64, nominal_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(EnfError::EmptyInput("ENF series has no samples"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(EnfError::param(
                "samples",
                format!("sample {i} is not finite"),
            ));
        }
        if !(resolution_spp.is_finite() && resolution_spp > 0.0) {
            return Err(EnfError::param(
                "resolution_spp",
                format!("must be a positive finite number, got {resolution_spp}"),
            ));
        }
        if !nominal_hz.is_finite() {
            return Err(EnfError::param("nominal_hz", "must be finite"));
        }
        Ok(Self {
            samples,
            resolution_spp,
            nominal_hz,
            start_offset_s: 0.0,
        })
    }

    pub fn with_start_offset(mut self, start_offset_s: f64) -> Result<Self> {
        if !(start_offset_s.is_finite() && start_offset_s >= 0.0) {
            return Err(EnfError::param(
                "start_offset_s",
                format!("must be non-negative, got {start_offset_s}"),
            ));
        }
        self.start_offset_s = start_offset_s;
        Ok(self)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; a series cannot be constructed empty.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seconds per point.
    pub fn resolution_spp(&self) -> f64 {
        self.resolution_spp
    }

    /// Sampling frequency of the series itself, `1/δ`.
    pub fn rate_hz(&self) -> f64 {
        1.0 / self.resolution_spp
    }

    pub fn nominal_hz(&self) -> f64 {
        self.nominal_hz
    }

    pub fn start_offset_s(&self) -> f64 {
        self.start_offset_s
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.resolution_spp
    }

    /// Offset of sample `i` relative to the reference origin.
    pub fn offset_of(&self, i: usize) -> f64 {
        self.start_offset_s + i as f64 * self.resolution_spp
    }

    /// Copies `len` samples starting at `start`; the result keeps the
    /// resolution and nominal and has its start offset advanced accordingly.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.samples.len() {
            return Err(EnfError::LengthMismatch(format!(
                "slice [{start}, {}) out of bounds for series of {} samples",
                start + len,
                self.samples.len()
            )));
        }
        Ok(Self {
            samples: self.samples[start..start + len].to_vec(),
            resolution_spp: self.resolution_spp,
            nominal_hz: self.nominal_hz,
            start_offset_s: self.offset_of(start),
        })
    }

    /// Same metadata, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.resolution_spp, self.nominal_hz)?.with_start_offset(self.start_offset_s)
    }

    /// Keeps every `factor`-th sample, multiplying the resolution by `factor`.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(EnfError::param("factor", "must be at least 1"));
        }
        let samples: Vec<f64> = self.samples.iter().step_by(factor).copied().collect();
        Self::new(samples, self.resolution_spp * factor as f64, self.nominal_hz)?
            .with_start_offset(self.start_offset_s)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// AR(1) coefficient and innovation standard deviation (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Params {
    pub a: f64,
    pub sigma_x: f64,
}

impl Ar1Params {
    pub fn new(a: f64, sigma_x: f64) -> Result<Self> {
        let p = Self { a, sigma_x };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || self.a.abs() >= 1.0 {
            return Err(EnfError::param(
                "a",
                format!("AR(1) coefficient must satisfy |a| < 1, got {}", self.a),
            ));
        }
        if !(self.sigma_x.is_finite() && self.sigma_x >= 0.0) {
            return Err(EnfError::param(
                "sigma_x",
                format!("innovation std must be finite and >= 0, got {}", self.sigma_x),
            ));
        }
        Ok(())
    }

    /// Variance of the stationary process, `σ_x² / (1 − a²)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma_x * self.sigma_x / (1.0 - self.a * self.a)
    }
}

/// One-sided periodogram of a mean-removed ENF series.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Bin frequencies in Hz, from 0 up to `1/(2δ)`.
    pub frequencies: Vec<f64>,
    /// Bin energies in dB relative to the strongest bin.
    pub energy_db: Vec<f64>,
    /// Linear one-sided bin energies; they sum to the time-domain energy.
    pub energy: Vec<f64>,
}

impl SpectrumEstimate {
    /// Index of the bin whose frequency is closest to `hz`.
    pub fn bin_nearest(&self, hz: f64) -> usize {
        let step = self.frequencies.get(1).copied().unwrap_or(1.0);
        ((hz / step).round() as usize).min(self.frequencies.len() - 1)
    }

    pub fn peak_bin(&self) -> usize {
        self.energy
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &e)| if e > best.1 { (i, e) } else { best })
            .0
    }

    pub fn total_energy(&self) -> f64 {
        self.energy.iter().sum()
    }
}

/// Lowest dB value reported for bins with no energy at all.
const DB_FLOOR: f64 = -400.0;

/// Synthesizes `length` samples of an AR(1) ENF around `nominal_hz`.
///
/// The recursion starts from `f[-1] = 0`, so the first few hundred samples
/// carry a start-up transient when `a` is close to one.
pub fn synthesize_ar1(
    length: usize,
    params: Ar1Params,
    resolution_spp: f64,
    nominal_hz: f64,
    seed: u64,
) -> Result<EnfSeries> {
    params.validate()?;
    if length == 0 {
        return Err(EnfError::param("length", "must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let mut samples = Vec::with_capacity(length);
    let mut prev = 0.0_f64;
    for _ in 0..length {
        let x: f64 = StandardNormal.sample(&mut rng);
        prev = params.a * prev + params.sigma_x * x;
        samples.push(prev + nominal_hz);
    }
    EnfSeries::new(samples, resolution_spp, nominal_hz)
}

/// Biased autocorrelation `r[k] = (1/N) Σ x[n] x[n+k]` of the mean-removed
/// series, for `k = 0..=max_lag`.
pub fn autocorrelation(samples: &[f64], max_lag: usize) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return vec![0.0; max_lag + 1];
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    (0..=max_lag)
        .map(|k| {
            if k >= n {
                return 0.0;
            }
            centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// Fits `a` and `σ_x` with the order-1 Levinson-Durbin solution.
pub fn fit_ar1(enf: &EnfSeries) -> Result<Ar1Params> {
    let s = enf.samples();
    if s.len() < 3 {
        return Err(EnfError::DegenerateInput(format!(
            "need at least 3 samples to fit AR(1), got {}",
            s.len()
        )));
    }
    let first = s[0];
    if s.iter().all(|&v| v == first) {
        return Err(EnfError::DegenerateInput(
            "series has zero variance after mean removal".into(),
        ));
    }
    let r = autocorrelation(s, 1);
    if r[0] <= 0.0 {
        return Err(EnfError::DegenerateInput(
            "series has zero variance after mean removal".into(),
        ));
    }
    let a = r[1] / r[0];
    let sigma_x = (r[0] * (1.0 - a * a)).max(0.0).sqrt();
    Ok(Ar1Params { a, sigma_x })
}

/// Rectangular-window periodogram of the mean-removed series, zero padded to
/// `fft_length` points.
pub fn energy_density_spectrum(enf: &EnfSeries, fft_length: usize) -> Result<SpectrumEstimate> {
    let s = enf.samples();
    if s.is_empty() {
        return Err(EnfError::EmptyInput("spectrum of an empty series"));
    }
    if fft_length < s.len() {
        return Err(EnfError::param(
            "fft_length",
            format!("must be >= series length {}, got {fft_length}", s.len()),
        ));
    }
    let mean = enf.mean();
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_length);
    let mut input = fft.make_input_vec();
    for (dst, v) in input.iter_mut().zip(s) {
        *dst = v - mean;
    }
    let mut spectrum = fft.make_output_vec();
    fft.process(&mut input, &mut spectrum)
        .map_err(|e| EnfError::DegenerateInput(format!("FFT failed: {e}")))?;

    let n = fft_length as f64;
    let nyquist_is_bin = fft_length.is_multiple_of(2);
    let last = spectrum.len() - 1;
    let energy: Vec<f64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let single = k == 0 || (nyquist_is_bin && k == last);
            let scale = if single { 1.0 } else { 2.0 };
            scale * c.norm_sqr() / n
        })
        .collect();
    let peak = energy.iter().cloned().fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return Err(EnfError::DegenerateInput(
            "series has no energy after mean removal".into(),
        ));
    }
    let energy_db = energy
        .iter()
        .map(|&e| {
            if e > 0.0 {
                (10.0 * (e / peak).log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            }
        })
        .collect();
    let df = 1.0 / (n * enf.resolution_spp());
    let frequencies = (0..energy.len()).map(|k| k as f64 * df).collect();
    Ok(SpectrumEstimate {
        frequencies,
        energy_db,
        energy,
    })
}
