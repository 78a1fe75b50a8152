//! File formats and the on-disk reference store.
//!
//! * ENF series as CSV with header `offset_s,frequency_hz`.
//! * Waveforms as ENFT: the bytes `ENFT`, a little-endian `u32` version
//!   (1), the sample rate as a little-endian `f64`, then the samples as
//!   little-endian `f64`.
//! * Waveforms as 16-bit PCM mono WAV.

mod store;

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{EnfError, Result};
use crate::model::EnfSeries;
use crate::synthesis::TadSignal;

pub use store::{offset_to_utc, Fetched, InputKind, Period, ReferenceStore, SegmentData, SegmentEntry, SegmentKind};

/// Largest deviation of a CSV offset from the uniform grid.
pub const SPACING_TOLERANCE_S: f64 = 1e-6;

const ENFT_MAGIC: &[u8; 4] = b"ENFT";
const ENFT_VERSION: u32 = 1;
const ENFT_HEADER: usize = 16;

/// Parses an ENF CSV. The resolution is the mean spacing of the offsets,
/// and the start offset is the first row's offset.
pub fn parse_enf_csv(reader: impl Read, source_name: &str, nominal_hz: f64) -> Result<EnfSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| EnfError::parse(source_name, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "offset_s" || &headers[1] != "frequency_hz" {
        return Err(EnfError::parse(
            source_name,
            format!("expected header `offset_s,frequency_hz`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut offsets = Vec::new();
    let mut freqs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| EnfError::parse(source_name, e.to_string()))?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| EnfError::parse(source_name, format!("row {}: bad number in column {}", i + 2, j + 1)))
        };
        offsets.push(field(0)?);
        freqs.push(field(1)?);
    }
    if offsets.len() < 2 {
        return Err(EnfError::parse(source_name, "need at least two rows to infer the resolution"));
    }
    let n = offsets.len();
    let delta = (offsets[n - 1] - offsets[0]) / (n - 1) as f64;
    if delta <= 0.0 {
        return Err(EnfError::parse(source_name, "offsets must be strictly increasing"));
    }
    for (i, &o) in offsets.iter().enumerate() {
        let expected = offsets[0] + i as f64 * delta;
        if (o - expected).abs() > SPACING_TOLERANCE_S {
            return Err(EnfError::parse(
                source_name,
                format!("row {}: offset {o} s is off the uniform {delta} s grid", i + 2),
            ));
        }
    }
    EnfSeries::new(freqs, delta, nominal_hz)?.with_start_offset(offsets[0])
}

pub fn read_enf_csv(path: &Path, nominal_hz: f64) -> Result<EnfSeries> {
    let file = std::fs::File::open(path).map_err(|e| EnfError::io(path, e))?;
    parse_enf_csv(std::io::BufReader::new(file), &path.display().to_string(), nominal_hz)
}

/// Writes `offset_s,frequency_hz` rows with shortest round-trip formatting.
pub fn write_enf_csv_to(enf: &EnfSeries, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "offset_s,frequency_hz")?;
    for (i, f) in enf.samples().iter().enumerate() {
        writeln!(out, "{},{}", enf.offset_of(i), f)?;
    }
    out.flush()
}

pub fn write_enf_csv(enf: &EnfSeries, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| EnfError::io(path, e))?;
    write_enf_csv_to(enf, std::io::BufWriter::new(file)).map_err(|e| EnfError::io(path, e))
}

pub fn encode_enft(samples: &[f64], sample_rate_hz: f64) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(ENFT_HEADER + 8 * samples.len());
    bytes.extend_from_slice(ENFT_MAGIC);
    bytes.extend_from_slice(&ENFT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&sample_rate_hz.to_le_bytes());
    for s in samples {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    bytes
}

pub fn decode_enft(bytes: &[u8], source_name: &str) -> Result<TadSignal> {
    if bytes.len() < ENFT_HEADER || &bytes[..4] != ENFT_MAGIC {
        return Err(EnfError::parse(source_name, "not an ENFT file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != ENFT_VERSION {
        return Err(EnfError::parse(source_name, format!("unsupported ENFT version {version}")));
    }
    let rate = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[ENFT_HEADER..];
    if !body.len().is_multiple_of(8) {
        return Err(EnfError::parse(source_name, "truncated sample data"));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TadSignal::new(samples, rate).map_err(|e| EnfError::parse(source_name, e.to_string()))
}

pub fn read_enft(path: &Path) -> Result<TadSignal> {
    let bytes = std::fs::read(path).map_err(|e| EnfError::io(path, e))?;
    decode_enft(&bytes, &path.display().to_string())
}

pub fn write_enft(signal: &TadSignal, path: &Path) -> Result<()> {
    std::fs::write(path, encode_enft(signal.samples(), signal.sample_rate_hz())).map_err(|e| EnfError::io(path, e))
}

fn wav_err(path: &Path, e: hound::Error) -> EnfError {
    match e {
        hound::Error::IoError(io) => EnfError::io(path, io),
        other => EnfError::parse(path.display().to_string(), other.to_string()),
    }
}

/// Reads a mono WAV file. Integer samples are scaled to `[-1, 1)`.
pub fn read_wav(path: &Path) -> Result<TadSignal> {
    let reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(EnfError::parse(
            path.display().to_string(),
            format!("expected a mono recording, found {} channels", spec.channels),
        ));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_err(path, e))?
        }
        hound::SampleFormat::Float => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
    };
    TadSignal::new(samples, spec.sample_rate as f64)
        .map_err(|e| EnfError::parse(path.display().to_string(), e.to_string()))
}

/// Writes 16-bit PCM mono. Signals with a peak above 1 are scaled down to
/// fit; the sample rate is rounded to whole hertz.
pub fn write_wav(signal: &TadSignal, path: &Path) -> Result<()> {
    let rate = signal.sample_rate_hz().round();
    if rate < 1.0 || rate > u32::MAX as f64 {
        return Err(EnfError::param("sample_rate_hz", "WAV needs a whole-hertz rate"));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let peak = signal.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = 32768.0 / peak.max(1.0);
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for s in signal.samples() {
        w.write_sample((s * scale).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16).map_err(|e| wav_err(path, e))?;
    }
    w.finalize().map_err(|e| wav_err(path, e))
}

/// Reads a waveform, choosing the format by extension (`.wav`, else ENFT).
pub fn read_tad(path: &Path) -> Result<TadSignal> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "wav" => read_wav(path),
        _ => read_enft(path),
    }
}

/// Writes a waveform, choosing the format by extension (`.wav`, else ENFT).
pub fn write_tad(signal: &TadSignal, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "wav" => write_wav(signal, path),
        _ => write_enft(signal, path),
    }
}
