//! Instantaneous-frequency extraction from a waveform.
//!
//! The signal is cut into overlapping frames, each frame is tapered and
//! zero padded, and the magnitude-spectrum peak inside a band around the
//! nominal frequency is refined by fitting a parabola through the
//! log-magnitudes of the peak bin and its two neighbours.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{EnfError, Result};
use crate::model::EnfSeries;
use crate::synthesis::TadSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
    Hamming,
    Blackman,
}

impl Window {
    /// Periodic (DFT-even) coefficients of length `len`.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let n = len as f64;
        (0..len)
            .map(|i| {
                let x = 2.0 * PI * i as f64 / n;
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Hamming => 0.54 - 0.46 * x.cos(),
                    Window::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Window {
    type Err = EnfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "boxcar" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            "hamming" => Ok(Window::Hamming),
            "blackman" => Ok(Window::Blackman),
            other => Err(EnfError::param("window", format!("unknown window `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub frame_len_s: f64,
    /// Hop between frames, which is also the output resolution δ.
    pub step_s: f64,
    pub band_center_hz: f64,
    pub band_halfwidth_hz: f64,
    pub fft_zero_pad_factor: usize,
    pub window: Window,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 16.0,
            step_s: 1.0,
            band_center_hz: 50.0,
            band_halfwidth_hz: 1.0,
            fft_zero_pad_factor: 4,
            window: Window::Hann,
        }
    }
}

impl EstimatorConfig {
    pub fn frame_len_samples(&self, sample_rate_hz: f64) -> usize {
        (self.frame_len_s * sample_rate_hz).round() as usize
    }

    pub fn hop_samples(&self, sample_rate_hz: f64) -> usize {
        (self.step_s * sample_rate_hz).round() as usize
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.frame_len_s.is_finite() && self.frame_len_s > 0.0) {
            return Err(EnfError::param("frame_len_s", "must be positive"));
        }
        if !(self.step_s.is_finite() && self.step_s > 0.0) {
            return Err(EnfError::param("step_s", "must be positive"));
        }
        if self.frame_len_s < self.step_s {
            return Err(EnfError::param(
                "frame_len_s",
                format!("frame {} s is shorter than the step {} s", self.frame_len_s, self.step_s),
            ));
        }
        if !(self.band_halfwidth_hz.is_finite() && self.band_halfwidth_hz > 0.0) {
            return Err(EnfError::param("band_halfwidth_hz", "must be positive"));
        }
        if !(self.band_center_hz.is_finite() && self.band_center_hz - self.band_halfwidth_hz > 0.0) {
            return Err(EnfError::param("band_center_hz", "band must lie above 0 Hz"));
        }
        if self.band_center_hz + self.band_halfwidth_hz >= sample_rate_hz / 2.0 {
            return Err(EnfError::param(
                "band_center_hz",
                format!("band must lie below the Nyquist frequency {} Hz", sample_rate_hz / 2.0),
            ));
        }
        if self.fft_zero_pad_factor == 0 {
            return Err(EnfError::param("fft_zero_pad_factor", "must be at least 1"));
        }
        if self.frame_len_samples(sample_rate_hz) < 4 {
            return Err(EnfError::param("frame_len_s", "frame must span at least 4 samples"));
        }
        if self.hop_samples(sample_rate_hz) == 0 {
            return Err(EnfError::param("step_s", "step is shorter than one sample"));
        }
        Ok(())
    }
}

/// Frame layout over a borrowed signal. Trailing samples that do not fill a
/// whole frame are dropped.
#[derive(Debug, Clone, Copy)]
pub struct Frames<'a> {
    samples: &'a [f64],
    sample_rate_hz: f64,
    frame_len: usize,
    hop: usize,
    count: usize,
}

impl<'a> Frames<'a> {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn get(&self, i: usize) -> Option<&'a [f64]> {
        (i < self.count).then(|| &self.samples[i * self.hop..i * self.hop + self.frame_len])
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + '_ {
        (0..self.count).map(move |i| self.get(i).expect("index below count"))
    }

    /// Time stamp of frame `i`: its start plus half a frame.
    pub fn center_s(&self, i: usize) -> f64 {
        (i * self.hop) as f64 / self.sample_rate_hz + self.frame_len as f64 / (2.0 * self.sample_rate_hz)
    }
}

/// Number of whole frames of `frame_len` at `hop` in `n` samples.
pub fn frame_count(n: usize, frame_len: usize, hop: usize) -> usize {
    if n < frame_len || hop == 0 {
        0
    } else {
        (n - frame_len) / hop + 1
    }
}

pub fn frame_signal<'a>(signal: &'a TadSignal, cfg: &EstimatorConfig) -> Result<Frames<'a>> {
    let fs = signal.sample_rate_hz();
    cfg.validate(fs)?;
    let frame_len = cfg.frame_len_samples(fs);
    let hop = cfg.hop_samples(fs);
    if signal.len() < frame_len {
        return Err(EnfError::SignalTooShort {
            samples: signal.len(),
            frame: frame_len,
        });
    }
    Ok(Frames {
        samples: signal.samples(),
        sample_rate_hz: fs,
        frame_len,
        hop,
        count: frame_count(signal.len(), frame_len, hop),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEstimate {
    pub frequency_hz: f64,
    /// False when the peak sat on a band edge (or next to a zero-magnitude
    /// bin) and the bin centre was returned as is.
    pub interpolated: bool,
}

/// Reusable per-frame estimator: window, FFT plan and band limits for one
/// frame length and sample rate.
pub struct FrameEstimator {
    window: Vec<f64>,
    fft: Arc<dyn RealToComplex<f64>>,
    bin_hz: f64,
    band_lo: usize,
    band_hi: usize,
}

impl std::fmt::Debug for FrameEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameEstimator")
            .field("frame_len", &self.window.len())
            .field("fft_len", &self.fft.len())
            .field("band", &(self.band_lo, self.band_hi))
            .finish()
    }
}

struct Scratch {
    input: Vec<f64>,
    output: Vec<Complex<f64>>,
    work: Vec<Complex<f64>>,
}

impl FrameEstimator {
    pub fn new(cfg: &EstimatorConfig, sample_rate_hz: f64) -> Result<Self> {
        cfg.validate(sample_rate_hz)?;
        let frame_len = cfg.frame_len_samples(sample_rate_hz);
        let fft_len = frame_len * cfg.fft_zero_pad_factor;
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(fft_len);
        let bin_hz = sample_rate_hz / fft_len as f64;
        let lo_hz = cfg.band_center_hz - cfg.band_halfwidth_hz;
        let hi_hz = cfg.band_center_hz + cfg.band_halfwidth_hz;
        let band_lo = (lo_hz / bin_hz - 1e-9).ceil() as usize;
        let band_hi = ((hi_hz / bin_hz + 1e-9).floor() as usize).min(fft_len / 2);
        if band_lo > band_hi {
            return Err(EnfError::param(
                "band_halfwidth_hz",
                "band is narrower than one FFT bin; increase the zero padding",
            ));
        }
        Ok(Self {
            window: cfg.window.coefficients(frame_len),
            fft,
            bin_hz,
            band_lo,
            band_hi,
        })
    }

    pub fn frame_len(&self) -> usize {
        self.window.len()
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            input: self.fft.make_input_vec(),
            output: self.fft.make_output_vec(),
            work: self.fft.make_scratch_vec(),
        }
    }

    pub fn estimate(&self, frame: &[f64]) -> Result<FrameEstimate> {
        self.estimate_with(frame, &mut self.scratch())
    }

    fn estimate_with(&self, frame: &[f64], scratch: &mut Scratch) -> Result<FrameEstimate> {
        if frame.len() != self.window.len() {
            return Err(EnfError::LengthMismatch(format!(
                "frame of {} samples, estimator expects {}",
                frame.len(),
                self.window.len()
            )));
        }
        if frame.iter().all(|&v| v == 0.0) {
            return Err(EnfError::DegenerateInput("all-zero frame".into()));
        }
        let (head, tail) = scratch.input.split_at_mut(frame.len());
        for ((dst, &x), &w) in head.iter_mut().zip(frame).zip(&self.window) {
            *dst = x * w;
        }
        tail.fill(0.0);
        self.fft
            .process_with_scratch(&mut scratch.input, &mut scratch.output, &mut scratch.work)
            .map_err(|e| EnfError::DegenerateInput(format!("FFT failed: {e}")))?;

        let power = |k: usize| scratch.output[k].norm_sqr();
        let mut peak = self.band_lo;
        let mut peak_power = power(peak);
        for k in self.band_lo + 1..=self.band_hi {
            let p = power(k);
            if p > peak_power {
                peak = k;
                peak_power = p;
            }
        }
        if peak_power == 0.0 {
            return Err(EnfError::DegenerateInput("no energy inside the band".into()));
        }
        let on_edge = peak == self.band_lo || peak == self.band_hi;
        if on_edge {
            return Ok(FrameEstimate {
                frequency_hz: peak as f64 * self.bin_hz,
                interpolated: false,
            });
        }
        let (left, right) = (power(peak - 1), power(peak + 1));
        if left == 0.0 || right == 0.0 {
            return Ok(FrameEstimate {
                frequency_hz: peak as f64 * self.bin_hz,
                interpolated: false,
            });
        }
        // Log-power is twice the log-magnitude, which leaves the vertex unchanged.
        let (alpha, beta, gamma) = (left.ln(), peak_power.ln(), right.ln());
        let denom = alpha - 2.0 * beta + gamma;
        let offset = if denom < 0.0 {
            (0.5 * (alpha - gamma) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        Ok(FrameEstimate {
            frequency_hz: (peak as f64 + offset) * self.bin_hz,
            interpolated: true,
        })
    }
}

/// Estimates the frequency of one frame. Builds a fresh FFT plan; use
/// [`FrameEstimator`] when estimating many frames.
pub fn estimate_frame_frequency(
    frame: &[f64],
    cfg: &EstimatorConfig,
    sample_rate_hz: f64,
) -> Result<FrameEstimate> {
    let mut cfg = *cfg;
    cfg.frame_len_s = frame.len() as f64 / sample_rate_hz;
    cfg.step_s = cfg.step_s.min(cfg.frame_len_s);
    FrameEstimator::new(&cfg, sample_rate_hz)?.estimate(frame)
}

/// Extracts the ENF of `signal`, one value per frame.
///
/// The output resolution is the realized hop, `round(step_s·f_S)/f_S`, and
/// the first value is stamped at half a frame from the signal start.
pub fn estimate_if(signal: &TadSignal, cfg: &EstimatorConfig) -> Result<EnfSeries> {
    let frames = frame_signal(signal, cfg)?;
    let estimator = FrameEstimator::new(cfg, signal.sample_rate_hz())?;
    let values = (0..frames.len())
        .into_par_iter()
        .map_init(
            || estimator.scratch(),
            |scratch, i| {
                let frame = frames.get(i).expect("frame index in range");
                estimator.estimate_with(frame, scratch).map(|e| e.frequency_hz)
            },
        )
        .collect::<Result<Vec<f64>>>()?;
    let fs = signal.sample_rate_hz();
    EnfSeries::new(values, frames.hop() as f64 / fs, cfg.band_center_hz)?
        .with_start_offset(frames.center_s(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / fs + phase).cos())
            .collect()
    }

    fn signal(seconds: f64, fs: f64) -> TadSignal {
        TadSignal::new(tone(50.0, fs, (seconds * fs) as usize, 0.0), fs).unwrap()
    }

    #[test]
    fn frame_counts() {
        let cfg = EstimatorConfig {
            frame_len_s: 2.0,
            step_s: 1.0,
            ..Default::default()
        };
        let s = signal(10.0, 400.0);
        let frames = frame_signal(&s, &cfg).unwrap();
        assert_eq!(frames.len(), 9);
        assert_eq!(frames.frame_len(), 800);
        assert_eq!(frames.center_s(0), 1.0);
        assert_eq!(frames.center_s(3), 4.0);
    }

    #[test]
    fn hop_equal_to_frame_partitions() {
        let cfg = EstimatorConfig {
            frame_len_s: 2.0,
            step_s: 2.0,
            ..Default::default()
        };
        let s = signal(10.0, 400.0);
        let frames = frame_signal(&s, &cfg).unwrap();
        assert_eq!(frames.len(), 5);
        let joined: Vec<f64> = frames.iter().flatten().copied().collect();
        assert_eq!(joined.as_slice(), s.samples());
    }

    #[test]
    fn short_signal_rejected() {
        let cfg = EstimatorConfig {
            frame_len_s: 2.0,
            step_s: 1.0,
            ..Default::default()
        };
        let err = frame_signal(&signal(1.5, 400.0), &cfg).unwrap_err();
        assert!(matches!(err, EnfError::SignalTooShort { .. }));
    }

    #[test]
    fn config_validation() {
        let fs = 400.0;
        let ok = EstimatorConfig::default();
        assert!(ok.validate(fs).is_ok());
        assert!(EstimatorConfig { step_s: 20.0, ..ok }.validate(fs).is_err());
        assert!(EstimatorConfig { band_halfwidth_hz: 60.0, ..ok }.validate(fs).is_err());
        assert!(EstimatorConfig { frame_len_s: 0.005, step_s: 0.005, ..ok }.validate(fs).is_err());
        assert!(EstimatorConfig { fft_zero_pad_factor: 0, ..ok }.validate(fs).is_err());
        assert!(EstimatorConfig { band_center_hz: 199.5, ..ok }.validate(fs).is_err());
    }

    #[test]
    fn on_bin_tone() {
        let fs = 400.0;
        let frame = tone(50.0, fs, 6400, 0.4);
        let e = estimate_frame_frequency(&frame, &EstimatorConfig::default(), fs).unwrap();
        assert!((e.frequency_hz - 50.0).abs() < 1e-4, "{}", e.frequency_hz);
        assert!(e.interpolated);
    }

    #[test]
    fn off_bin_tone_is_interpolated() {
        let fs = 400.0;
        for (freq, phase) in [(50.02, 0.0), (50.0071, 1.1), (49.9933, 2.5)] {
            let frame = tone(freq, fs, 6400, phase);
            let e = estimate_frame_frequency(&frame, &EstimatorConfig::default(), fs).unwrap();
            assert!((e.frequency_hz - freq).abs() < 1e-3, "{freq}: {}", e.frequency_hz);
        }
    }

    #[test]
    fn all_zero_frame_rejected() {
        let err = estimate_frame_frequency(&[0.0; 6400], &EstimatorConfig::default(), 400.0);
        assert!(matches!(err, Err(EnfError::DegenerateInput(_))));
    }

    #[test]
    fn peak_on_band_edge_is_flagged() {
        let fs = 400.0;
        // 53.03 Hz lies outside 50 ± 1; the in-band maximum is the upper edge.
        let frame = tone(53.03, fs, 6400, 0.0);
        let e = estimate_frame_frequency(&frame, &EstimatorConfig::default(), fs).unwrap();
        assert!(!e.interpolated);
        assert!((e.frequency_hz - 51.0).abs() < 1e-9);
    }

    #[test]
    fn output_length_and_metadata() {
        let s = signal(600.0, 400.0);
        let enf = estimate_if(&s, &EstimatorConfig::default()).unwrap();
        assert_eq!(enf.len(), 585);
        assert_eq!(enf.resolution_spp(), 1.0);
        assert_eq!(enf.nominal_hz(), 50.0);
        assert_eq!(enf.start_offset_s(), 8.0);
        assert!(enf.samples().iter().all(|f| (f - 50.0).abs() < 1e-4));
    }
}
