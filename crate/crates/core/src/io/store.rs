//! Flat-file reference store.
//!
//! Layout under the root directory:
//!
//! ```text
//! index.json                      segment index, replaced atomically
//! <grid>/<YYYY-MM>/<start_ns>.enft
//! ```
//!
//! Segment files are ENFT regardless of kind, so stored samples are kept
//! bit for bit. Times are nanoseconds since the Unix epoch, UTC. The sample
//! period is kept as an exact fraction of a second whenever the float value
//! has one with a small denominator.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{decode_enft, encode_enft, read_enf_csv, read_tad};
use crate::error::{EnfError, Result};
use crate::model::EnfSeries;
use crate::synthesis::TadSignal;

const INDEX_FILE: &str = "index.json";
const LOCK_FILE: &str = "index.lock";
const INDEX_VERSION: u32 = 1;
const NS: i128 = 1_000_000_000;

/// Sample period `num / den` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub num: u64,
    pub den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Period {
    /// The exact fraction equal to `seconds`, if its denominator is a whole
    /// reciprocal or a power of ten up to 10⁹.
    pub fn from_seconds(seconds: f64) -> Option<Self> {
        if !(seconds.is_finite() && seconds > 0.0) {
            return None;
        }
        let recip = (1.0 / seconds).round();
        if recip >= 1.0 && recip < u64::MAX as f64 && 1.0 / recip == seconds {
            return Some(Self { num: 1, den: recip as u64 });
        }
        let mut den = 1u64;
        for _ in 0..=9 {
            let num = (seconds * den as f64).round();
            if num >= 1.0 && num < u64::MAX as f64 && num / den as f64 == seconds {
                let g = gcd(num as u64, den);
                return Some(Self { num: num as u64 / g, den: den / g });
            }
            den *= 10;
        }
        None
    }

    pub fn seconds(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Enf,
    Tad,
}

/// One stored segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub grid: String,
    pub kind: SegmentKind,
    /// Time of the first sample, for humans; `start_ns` is authoritative.
    pub start_utc: String,
    pub start_ns: i64,
    pub samples: u64,
    pub period: Option<Period>,
    pub period_s: f64,
    pub nominal_hz: Option<f64>,
    /// Path relative to the store root.
    pub file: String,
}

impl SegmentEntry {
    /// Nanoseconds from the segment start to sample `i`, rounded down.
    fn ns_at(&self, i: u64) -> i128 {
        match self.period {
            Some(p) => i as i128 * p.num as i128 * NS / p.den as i128,
            None => (i as f64 * self.period_s * 1e9).round() as i128,
        }
    }

    /// First sample index whose time is at or after `dt_ns` past the start.
    fn index_at_or_after(&self, dt_ns: i128) -> u64 {
        if dt_ns <= 0 {
            return 0;
        }
        let i = match self.period {
            Some(p) => {
                let q = p.num as i128 * NS;
                (dt_ns * p.den as i128 + q - 1) / q
            }
            None => (dt_ns as f64 / (self.period_s * 1e9) - 1e-9).ceil().max(0.0) as i128,
        };
        i.min(self.samples as i128) as u64
    }

    pub fn end_ns(&self) -> i64 {
        (self.start_ns as i128 + self.ns_at(self.samples)) as i64
    }

    pub fn start(&self) -> DateTime<Utc> {
        DateTime::from_timestamp_nanos(self.start_ns)
    }

    pub fn end(&self) -> DateTime<Utc> {
        DateTime::from_timestamp_nanos(self.end_ns())
    }

    fn continues(&self, next: &SegmentEntry) -> bool {
        self.kind == next.kind
            && self.period_s == next.period_s
            && self.nominal_hz == next.nominal_hz
            && self.end_ns() == next.start_ns
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Index {
    version: u32,
    segments: Vec<SegmentEntry>,
}

/// Samples of a stored or fetched segment.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentData {
    Enf(EnfSeries),
    Tad(TadSignal),
}

impl SegmentData {
    pub fn len(&self) -> usize {
        match self {
            SegmentData::Enf(e) => e.len(),
            SegmentData::Tad(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_enf(&self) -> Option<&EnfSeries> {
        match self {
            SegmentData::Enf(e) => Some(e),
            SegmentData::Tad(_) => None,
        }
    }

    pub fn as_tad(&self) -> Option<&TadSignal> {
        match self {
            SegmentData::Tad(t) => Some(t),
            SegmentData::Enf(_) => None,
        }
    }
}

/// A fetched range together with the time of its first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Fetched {
    pub grid: String,
    pub start: DateTime<Utc>,
    pub period: Option<Period>,
    pub period_s: f64,
    pub data: SegmentData,
}

impl Fetched {
    /// UTC time of sample `k`, e.g. a matched offset `k̂`.
    pub fn utc_of_offset(&self, k: usize) -> DateTime<Utc> {
        at_offset(self.start, k, self.period, self.period_s)
    }
}

fn at_offset(start: DateTime<Utc>, k: usize, period: Option<Period>, period_s: f64) -> DateTime<Utc> {
    let dt = match period {
        Some(p) => k as i128 * p.num as i128 * NS / p.den as i128,
        None => (k as f64 * period_s * 1e9).round() as i128,
    };
    start + chrono::Duration::nanoseconds(dt as i64)
}

/// UTC time of offset `k` in a series of resolution `delta_spp` whose first
/// sample is at `start`.
pub fn offset_to_utc(start: DateTime<Utc>, k: usize, delta_spp: f64) -> DateTime<Utc> {
    at_offset(start, k, Period::from_seconds(delta_spp), delta_spp)
}

/// Input file formats accepted by [`ReferenceStore::ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    EnfCsv,
    Wav,
    Enft,
}

impl std::str::FromStr for InputKind {
    type Err = EnfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "enf_csv" | "csv" => Ok(InputKind::EnfCsv),
            "wav" => Ok(InputKind::Wav),
            "enft" => Ok(InputKind::Enft),
            other => Err(EnfError::param("kind", format!("expected enf_csv, wav or enft, got `{other}`"))),
        }
    }
}

impl InputKind {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(InputKind::EnfCsv),
            "wav" => Some(InputKind::Wav),
            "enft" => Some(InputKind::Enft),
            _ => None,
        }
    }
}

fn secs(ns: i128) -> f64 {
    ns as f64 / 1e9
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| EnfError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| EnfError::io(path, e))
}

/// Held while the index is being changed.
struct WriteLock(PathBuf);

impl WriteLock {
    fn acquire(root: &Path) -> Result<Self> {
        let path = root.join(LOCK_FILE);
        std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| EnfError::io(&path, e))?;
        Ok(Self(path))
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Segments on disk indexed by grid label and UTC time.
#[derive(Debug, Clone)]
pub struct ReferenceStore {
    root: PathBuf,
    index: Index,
}

impl ReferenceStore {
    /// Opens the store at `root`, creating the directory if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| EnfError::io(&root, e))?;
        let mut store = Self {
            root,
            index: Index {
                version: INDEX_VERSION,
                segments: Vec::new(),
            },
        };
        store.reload()?;
        Ok(store)
    }

    /// Re-reads the index from disk.
    pub fn reload(&mut self) -> Result<()> {
        let path = self.root.join(INDEX_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let index: Index = serde_json::from_slice(&bytes)
                    .map_err(|e| EnfError::parse(path.display().to_string(), e.to_string()))?;
                if index.version != INDEX_VERSION {
                    return Err(EnfError::parse(
                        path.display().to_string(),
                        format!("unsupported index version {}", index.version),
                    ));
                }
                self.index = index;
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(EnfError::io(path, e)),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// All segments, ordered by grid label then start time.
    pub fn segments(&self) -> &[SegmentEntry] {
        &self.index.segments
    }

    /// Reads a file and stores it. `start` is the UTC time of offset zero;
    /// CSV offsets are added to it.
    pub fn ingest(
        &mut self,
        path: &Path,
        kind: InputKind,
        grid: &str,
        start: DateTime<Utc>,
        nominal_hz: f64,
    ) -> Result<SegmentEntry> {
        match kind {
            InputKind::EnfCsv => {
                let enf = read_enf_csv(path, nominal_hz)?;
                self.ingest_enf(&enf, grid, start)
            }
            InputKind::Wav | InputKind::Enft => {
                let tad = read_tad(path)?;
                self.ingest_tad(&tad, grid, start)
            }
        }
    }

    /// Stores an ENF series whose offset zero is at `start`.
    pub fn ingest_enf(&mut self, enf: &EnfSeries, grid: &str, start: DateTime<Utc>) -> Result<SegmentEntry> {
        let first = start + chrono::Duration::nanoseconds((enf.start_offset_s() * 1e9).round() as i64);
        self.insert(
            grid,
            SegmentKind::Enf,
            first,
            enf.resolution_spp(),
            Some(enf.nominal_hz()),
            encode_enft(enf.samples(), enf.rate_hz()),
            enf.len(),
        )
    }

    /// Stores a waveform whose first sample is at `start`.
    pub fn ingest_tad(&mut self, tad: &TadSignal, grid: &str, start: DateTime<Utc>) -> Result<SegmentEntry> {
        self.insert(
            grid,
            SegmentKind::Tad,
            start,
            1.0 / tad.sample_rate_hz(),
            None,
            encode_enft(tad.samples(), tad.sample_rate_hz()),
            tad.len(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn insert(
        &mut self,
        grid: &str,
        kind: SegmentKind,
        start: DateTime<Utc>,
        period_s: f64,
        nominal_hz: Option<f64>,
        bytes: Vec<u8>,
        samples: usize,
    ) -> Result<SegmentEntry> {
        check_grid_label(grid)?;
        let start_ns = start
            .timestamp_nanos_opt()
            .ok_or_else(|| EnfError::param("start_utc", "outside the representable range"))?;
        let rel = format!("{grid}/{}/{start_ns}.enft", start.format("%Y-%m"));
        let entry = SegmentEntry {
            grid: grid.to_string(),
            kind,
            start_utc: start.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            start_ns,
            samples: samples as u64,
            period: Period::from_seconds(period_s),
            period_s,
            nominal_hz,
            file: rel.clone(),
        };

        let _lock = WriteLock::acquire(&self.root)?;
        self.reload()?;
        let (s, e) = (entry.start_ns, entry.end_ns());
        if self
            .index
            .segments
            .iter()
            .any(|x| x.grid == grid && s < x.end_ns() && x.start_ns < e)
        {
            return Err(EnfError::Overlap {
                grid: grid.to_string(),
                start: secs(s as i128),
                end: secs(e as i128),
            });
        }

        let path = self.root.join(&rel);
        let dir = path.parent().expect("segment path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| EnfError::io(dir, e))?;
        write_atomic(&path, &bytes)?;

        let mut index = self.index.clone();
        let at = index
            .segments
            .partition_point(|x| (x.grid.as_str(), x.start_ns) < (grid, start_ns));
        index.segments.insert(at, entry.clone());
        let json = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&self.root.join(INDEX_FILE), &json)?;
        self.index = index;
        Ok(entry)
    }

    fn load(&self, entry: &SegmentEntry) -> Result<Vec<f64>> {
        let path = self.root.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| EnfError::io(&path, e))?;
        let tad = decode_enft(&bytes, &path.display().to_string())?;
        if tad.len() as u64 != entry.samples {
            return Err(EnfError::parse(
                path.display().to_string(),
                format!("index lists {} samples, file holds {}", entry.samples, tad.len()),
            ));
        }
        Ok(tad.into_samples())
    }

    /// Samples with times in `[t0, t1)`. Adjacent segments that continue
    /// each other exactly are joined; any hole inside the range is an error.
    pub fn fetch(&self, grid: &str, t0: DateTime<Utc>, t1: DateTime<Utc>) -> Result<Fetched> {
        let to_ns = |t: DateTime<Utc>| {
            t.timestamp_nanos_opt()
                .map(i128::from)
                .ok_or_else(|| EnfError::param("time", "outside the representable range"))
        };
        let (t0n, t1n) = (to_ns(t0)?, to_ns(t1)?);
        if t1n <= t0n {
            return Err(EnfError::param("t1", "must be after t0"));
        }
        let uncovered = || EnfError::Uncovered {
            grid: grid.to_string(),
            t0: secs(t0n),
            t1: secs(t1n),
        };
        let segs: Vec<&SegmentEntry> = self.index.segments.iter().filter(|x| x.grid == grid).collect();
        let first = segs
            .iter()
            .position(|x| (x.start_ns as i128) <= t0n && t0n < x.end_ns() as i128)
            .ok_or_else(uncovered)?;

        let mut samples = Vec::new();
        let mut first_sample_ns = None;
        let mut i = first;
        loop {
            let seg = segs[i];
            let start = seg.start_ns as i128;
            let i0 = seg.index_at_or_after(t0n - start);
            let i1 = seg.index_at_or_after(t1n - start);
            if i0 < i1 {
                let data = self.load(seg)?;
                first_sample_ns.get_or_insert(start + seg.ns_at(i0));
                samples.extend_from_slice(&data[i0 as usize..i1 as usize]);
            }
            let end = seg.end_ns() as i128;
            if t1n <= end {
                break;
            }
            match segs.get(i + 1) {
                Some(next) if seg.continues(next) => i += 1,
                Some(next) if (next.start_ns as i128) < t1n => {
                    return Err(EnfError::Gap {
                        from: secs(end),
                        to: secs(next.start_ns as i128),
                    })
                }
                _ => return Err(uncovered()),
            }
        }

        let head = segs[first];
        let first_ns = first_sample_ns.ok_or(EnfError::EmptyInput("no sample falls inside the requested range"))?;
        let data = match head.kind {
            SegmentKind::Enf => SegmentData::Enf(EnfSeries::new(
                samples,
                head.period_s,
                head.nominal_hz.unwrap_or(f64::NAN),
            )?),
            SegmentKind::Tad => SegmentData::Tad(TadSignal::new(samples, 1.0 / head.period_s)?),
        };
        Ok(Fetched {
            grid: grid.to_string(),
            start: DateTime::from_timestamp_nanos(first_ns as i64),
            period: head.period,
            period_s: head.period_s,
            data,
        })
    }
}

fn check_grid_label(grid: &str) -> Result<()> {
    let ok = !grid.is_empty()
        && grid != "."
        && grid != ".."
        && grid.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(EnfError::param("grid", format!("`{grid}` is not a valid grid label")))
    }
}
