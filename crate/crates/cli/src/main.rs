//! `enf`: synthesize, estimate, match and store ENF data, and run sweeps.
//!
//! Exit status is 0 on success, 2 for invalid requests (bad flags, bad
//! config, mismatched inputs) and 3 for data problems (unreadable files,
//! degenerate signals, uncovered ranges).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use enf_core::estimation::{estimate_if, EstimatorConfig, Window};
use enf_core::harness::{
    epsilon_for, sweep_with, write_gnuplot_files, write_report_csv, write_trials_csv, SweepConfig,
};
use enf_core::io::{
    read_enf_csv, read_tad, write_enf_csv, write_enf_csv_to, write_tad, Fetched, InputKind, ReferenceStore,
    SegmentData,
};
use enf_core::matching::{decide, CensusConfig, Census, MatchConfig, Matcher, MetricKind, HISTOGRAM_BINS};
use enf_core::model::{energy_density_spectrum, fit_ar1, synthesize_ar1, Ar1Params};
use enf_core::rng::derive_seed;
use enf_core::synthesis::{
    add_awgn, db_to_linear, synthesize_noisy_enf_tfd, synthesize_tad, upsample_enf, TadSynthesisParams,
    TfdNoiseParams,
};
use enf_core::{EnfError, Result};

#[derive(Parser)]
#[command(name = "enf", version, about = "Electric network frequency toolkit")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Nominal mains frequency.
    #[arg(long, global = true, default_value = "50", value_parser = ["50", "60"])]
    nominal_hz: String,

    /// Output file (or directory for `sweep`). Defaults to stdout where a
    /// single text output is produced.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an AR(1) ENF series or a waveform carrying one.
    Synthesize(SynthesizeArgs),
    /// Fit AR(1) parameters to an ENF CSV and optionally write its spectrum.
    Fit(FitArgs),
    /// Estimate the ENF of a WAV or ENFT recording.
    Estimate(EstimateArgs),
    /// Find where a test ENF sits inside a reference ENF.
    Match(MatchArgs),
    /// Count reference offsets that correlate with the test above thresholds.
    Census(CensusArgs),
    /// Run a Monte Carlo sweep described by a TOML file.
    Sweep(SweepArgs),
    /// Add a file to a reference store.
    Ingest(IngestArgs),
    /// Extract a time range from a reference store.
    Fetch(FetchArgs),
    /// Validate a sweep config and list grid points that would be skipped.
    CheckConfig {
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Enf,
    Tad,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long, value_enum, default_value = "enf")]
    kind: SynthKind,
    #[arg(long, default_value_t = 3600.0)]
    duration_s: f64,
    /// ENF resolution in seconds per point.
    #[arg(long, default_value_t = 1.0)]
    delta_spp: f64,
    #[arg(long, default_value_t = 0.99)]
    a: f64,
    #[arg(long, default_value_t = enf_core::harness::DEFAULT_SIGMA_X)]
    sigma_x: f64,
    /// Add noise at this SNR: CRLB-scaled frequency noise for `enf`, white
    /// noise for `tad`.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 400.0)]
    sample_rate_hz: f64,
    /// Frame length N_F of the frequency-noise model.
    #[arg(long, default_value_t = 6400)]
    frame_for_crlb: usize,
    /// Render this ENF CSV instead of a fresh AR(1) series (`tad` only).
    #[arg(long)]
    from: Option<PathBuf>,
    /// Initial phase of the waveform in radians.
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    /// Write the energy density spectrum (dB) as CSV here.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[arg(long)]
    fft_length: Option<usize>,
}

#[derive(Args)]
struct EstimatorFlags {
    #[arg(long)]
    frame_len_s: Option<f64>,
    #[arg(long)]
    step_s: Option<f64>,
    /// Defaults to the nominal frequency.
    #[arg(long)]
    band_center_hz: Option<f64>,
    #[arg(long)]
    band_halfwidth_hz: Option<f64>,
    #[arg(long)]
    zero_pad: Option<usize>,
    #[arg(long)]
    window: Option<Window>,
}

impl EstimatorFlags {
    fn config(&self, nominal_hz: f64) -> EstimatorConfig {
        let d = EstimatorConfig::default();
        EstimatorConfig {
            frame_len_s: self.frame_len_s.unwrap_or(d.frame_len_s),
            step_s: self.step_s.unwrap_or(d.step_s),
            band_center_hz: self.band_center_hz.unwrap_or(nominal_hz),
            band_halfwidth_hz: self.band_halfwidth_hz.unwrap_or(d.band_halfwidth_hz),
            fft_zero_pad_factor: self.zero_pad.unwrap_or(d.fft_zero_pad_factor),
            window: self.window.unwrap_or(d.window),
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    input: PathBuf,
    #[command(flatten)]
    estimator: EstimatorFlags,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value = "cc")]
    metric: MetricKind,
    /// Tolerance in samples; defaults to 10 s worth of samples.
    #[arg(long)]
    epsilon: Option<usize>,
    /// True offset, enabling the success decision.
    #[arg(long)]
    k0: Option<usize>,
    /// Write the per-offset metric as `offset_samples,value`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 0.99])]
    thresholds: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    input: PathBuf,
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    grid: String,
    /// UTC time of offset zero, RFC 3339.
    #[arg(long)]
    start: DateTime<Utc>,
    /// enf_csv, wav or enft; guessed from the extension when omitted.
    #[arg(long)]
    kind: Option<InputKind>,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    grid: String,
    #[arg(long)]
    from: DateTime<Utc>,
    #[arg(long)]
    to: DateTime<Utc>,
    /// Also print the UTC time of this sample offset, e.g. a matched k̂.
    #[arg(long)]
    offset: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let nominal: f64 = cli.nominal_hz.parse().expect("restricted by clap");
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Synthesize(a) => synthesize(a, seed, nominal, out),
        Command::Fit(a) => fit(a, nominal, out),
        Command::Estimate(a) => {
            let tad = read_tad(&a.input)?;
            let enf = estimate_if(&tad, &a.estimator.config(nominal))?;
            emit_enf(&enf, out)
        }
        Command::Match(a) => match_cmd(a, nominal, out),
        Command::Census(a) => census(a, nominal, out),
        Command::Sweep(a) => sweep(a, cli.seed, out),
        Command::Ingest(a) => ingest(a, nominal),
        Command::Fetch(a) => fetch(a, out),
        Command::CheckConfig { config } => check_config(&config),
    }
}

fn emit_enf(enf: &enf_core::model::EnfSeries, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_enf_csv(enf, p),
        None => write_enf_csv_to(enf, std::io::stdout().lock()).map_err(|e| EnfError::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn require_out(out: Option<&Path>, what: &str) -> Result<PathBuf> {
    out.map(Path::to_path_buf).ok_or_else(|| EnfError::InvalidParameter {
        name: "out",
        reason: format!("{what} needs --out (a .wav or .enft path)"),
    })
}

fn synthesize(a: SynthesizeArgs, seed: u64, nominal: f64, out: Option<&Path>) -> Result<()> {
    let params = Ar1Params::new(a.a, a.sigma_x)?;
    let fresh = || {
        let n = (a.duration_s / a.delta_spp).round() as usize;
        synthesize_ar1(n, params, a.delta_spp, nominal, derive_seed(seed, &[1]))
    };
    match a.kind {
        SynthKind::Enf => {
            let mut enf = fresh()?;
            if let Some(db) = a.snr_db {
                let noise = TfdNoiseParams {
                    snr_linear: db_to_linear(db),
                    frame_len_samples: a.frame_for_crlb,
                    sample_rate_hz: a.sample_rate_hz,
                };
                enf = synthesize_noisy_enf_tfd(&enf, &noise, derive_seed(seed, &[2]))?;
            }
            emit_enf(&enf, out)
        }
        SynthKind::Tad => {
            let path = require_out(out, "a waveform")?;
            let enf = match &a.from {
                Some(p) => read_enf_csv(p, nominal)?,
                None => fresh()?,
            };
            let per_sample = upsample_enf(&enf, a.sample_rate_hz)?;
            let params = TadSynthesisParams {
                initial_phase_rad: a.phase,
                ..TadSynthesisParams::new(a.sample_rate_hz)
            };
            let mut tad = synthesize_tad(&per_sample, &params)?;
            if let Some(db) = a.snr_db {
                tad = add_awgn(&tad, db_to_linear(db), derive_seed(seed, &[3]))?;
            }
            write_tad(&tad, &path)
        }
    }
}

fn fit(a: FitArgs, nominal: f64, out: Option<&Path>) -> Result<()> {
    let enf = read_enf_csv(&a.input, nominal)?;
    let p = fit_ar1(&enf)?;
    print_line(out, &json!({"a": p.a, "sigma_x": p.sigma_x, "samples": enf.len()}).to_string())?;
    if let Some(path) = a.spectrum {
        let spec = energy_density_spectrum(&enf, a.fft_length.unwrap_or(enf.len()))?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["frequency_hz", "energy_db"]).map_err(|e| csv_err(&path, e))?;
        for (f, db) in spec.frequencies.iter().zip(&spec.energy_db) {
            w.write_record([f.to_string(), db.to_string()]).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| EnfError::Io { path, source: e })?;
    }
    Ok(())
}

fn csv_err(path: &Path, e: csv::Error) -> EnfError {
    EnfError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn print_line(out: Option<&Path>, line: &str) -> Result<()> {
    let res = match out {
        Some(p) => std::fs::write(p, format!("{line}\n")),
        None => writeln!(std::io::stdout(), "{line}"),
    };
    res.map_err(|e| EnfError::Io {
        path: out.map_or_else(|| "<stdout>".into(), Path::to_path_buf),
        source: e,
    })
}

fn match_cmd(a: MatchArgs, nominal: f64, out: Option<&Path>) -> Result<()> {
    let test = read_enf_csv(&a.test, nominal)?;
    let reference = read_enf_csv(&a.reference, nominal)?;
    let outcome = Matcher::default().scan(a.metric, &test, &reference)?;
    let epsilon = a.epsilon.unwrap_or_else(|| epsilon_for(10.0, reference.resolution_spp()));
    let mut summary = json!({
        "k_hat": outcome.k_hat,
        "offset_s": reference.offset_of(outcome.k_hat),
        "metric": outcome.metric_kind.to_string(),
        "best_value": outcome.best_value,
        "num_offsets": outcome.num_offsets,
        "epsilon_samples": epsilon,
    });
    if let Some(k0) = a.k0 {
        let d = decide(
            &outcome,
            &MatchConfig {
                epsilon_samples: epsilon,
                ground_truth_k0: Some(k0),
            },
        )?;
        summary["k0"] = json!(k0);
        summary["success"] = json!(d.success);
        summary["abs_error_samples"] = json!(d.abs_error_samples);
        summary["abs_error_s"] = json!(d.abs_error_s);
    }
    if let Some(path) = &a.trace {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["offset_samples", "value"]).map_err(|e| csv_err(path, e))?;
        for (k, v) in outcome.trace.iter().enumerate() {
            w.write_record([k.to_string(), v.to_string()]).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| EnfError::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    print_line(out, &summary.to_string())
}

fn census(a: CensusArgs, nominal: f64, out: Option<&Path>) -> Result<()> {
    let test = read_enf_csv(&a.test, nominal)?;
    let reference = read_enf_csv(&a.reference, nominal)?;
    let cfg = CensusConfig { thresholds: a.thresholds };
    let c = Matcher::default().census(&test, &reference, &cfg)?;
    println!(
        "{}",
        json!({
            "thresholds": c.thresholds,
            "counts": c.counts,
            "undefined": c.undefined,
            "num_offsets": c.num_offsets,
        })
    );
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["bin_lower", "bin_upper", "count", "fraction"])
            .map_err(|e| csv_err(path, e))?;
        let defined = (c.num_offsets - c.undefined).max(1) as f64;
        for i in 0..HISTOGRAM_BINS {
            w.write_record([
                format!("{:.1}", Census::bin_lower_edge(i)),
                format!("{:.1}", Census::bin_lower_edge(i + 1)),
                c.histogram[i].to_string(),
                (c.histogram[i] as f64 / defined).to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| EnfError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let cfg = SweepConfig::load(&a.config)?;
    let mut opts = cfg.resolve()?;
    if let Some(s) = seed {
        opts.base.master_seed = s;
    }
    if let Some(t) = a.trials {
        opts.base.trials = t;
    }
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    std::fs::create_dir_all(&dir).map_err(|e| EnfError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let report = sweep_with(&opts.base, &opts.grid, opts.epsilon_s, opts.census.as_ref())?;
    write_report_csv(&report, &dir.join("report.csv"))?;
    write_trials_csv(&report, &dir.join("trials.csv"))?;
    write_gnuplot_files(&report, &dir)?;
    for p in &report.points {
        println!(
            "{} L_T={}s L_R={}s δ={} SNR={}dB: accuracy {:.3} ± {:.3} over {} trials",
            p.scheme.name(),
            p.point.l_t_s,
            p.point.l_r_s,
            p.point.delta_spp,
            p.point.snr_db,
            p.accuracy,
            p.std_error,
            p.trials
        );
    }
    for s in &report.skipped {
        eprintln!(
            "skipped L_T={}s L_R={}s δ={} SNR={}dB: {}",
            s.point.l_t_s, s.point.l_r_s, s.point.delta_spp, s.point.snr_db, s.reason
        );
    }
    Ok(())
}

fn ingest(a: IngestArgs, nominal: f64) -> Result<()> {
    let kind = match a.kind {
        Some(k) => k,
        None => InputKind::from_path(&a.input).ok_or_else(|| EnfError::InvalidParameter {
            name: "kind",
            reason: format!("cannot tell the format of {}; pass --kind", a.input.display()),
        })?,
    };
    let mut store = ReferenceStore::open(&a.store)?;
    let e = store.ingest(&a.input, kind, &a.grid, a.start, nominal)?;
    println!(
        "{}",
        json!({"grid": e.grid, "start": e.start_utc, "end": e.end().to_rfc3339(), "samples": e.samples, "file": e.file})
    );
    Ok(())
}

fn fetch(a: FetchArgs, out: Option<&Path>) -> Result<()> {
    let store = ReferenceStore::open(&a.store)?;
    let got: Fetched = store.fetch(&a.grid, a.from, a.to)?;
    match &got.data {
        SegmentData::Enf(enf) => emit_enf(enf, out)?,
        SegmentData::Tad(tad) => write_tad(tad, &require_out(out, "a waveform range")?)?,
    }
    let mut info = json!({"start": got.start.to_rfc3339(), "samples": got.data.len()});
    if let Some(k) = a.offset {
        info["offset"] = json!(k);
        info["offset_utc"] = json!(got.utc_of_offset(k).to_rfc3339());
    }
    eprintln!("{info}");
    Ok(())
}

fn check_config(path: &Path) -> Result<()> {
    let cfg = SweepConfig::load(path)?;
    let opts = cfg.resolve()?;
    let bad = opts.invalid_points();
    let total = opts.grid.len();
    println!(
        "{}: scheme {}, {} grid points, {} trials each, metric {}",
        path.display(),
        opts.base.scheme.name(),
        total,
        opts.base.trials,
        opts.base.metric
    );
    for s in &bad {
        println!(
            "invalid point L_T={}s L_R={}s δ={} SNR={}dB: {}",
            s.point.l_t_s, s.point.l_r_s, s.point.delta_spp, s.point.snr_db, s.reason
        );
    }
    if bad.len() == total {
        return Err(EnfError::Config("no valid grid point".into()));
    }
    Ok(())
}
