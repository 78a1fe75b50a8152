//! Sweep output files: a summary CSV, a per-trial CSV and gnuplot tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{AccuracyReport, GridPoint, PointReport};
use crate::error::{EnfError, Result};

fn csv_err(path: &Path, e: csv::Error) -> EnfError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EnfError::io(path, io),
        other => EnfError::parse(path.display().to_string(), format!("{other:?}")),
    }
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// One row per grid point; skipped points are listed with their reason.
pub fn write_report_csv(report: &AccuracyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "scheme", "backing", "metric", "l_t_s", "l_r_s", "delta_spp", "snr_db", "epsilon_samples",
        "trials", "successes", "accuracy", "std_error", "chance_level", "mean_abs_error_s",
        "census_thresholds", "census_mean_counts", "status",
    ])
    .map_err(|e| csv_err(path, e))?;
    for p in &report.points {
        let (th, counts) = p
            .census
            .as_ref()
            .map(|c| (joined(&c.thresholds), joined(&c.mean_counts)))
            .unwrap_or_default();
        w.write_record([
            p.scheme.name().to_string(),
            p.backing.clone(),
            p.metric.to_string(),
            p.point.l_t_s.to_string(),
            p.point.l_r_s.to_string(),
            p.point.delta_spp.to_string(),
            p.point.snr_db.to_string(),
            p.epsilon_samples.to_string(),
            p.trials.to_string(),
            p.successes.to_string(),
            p.accuracy.to_string(),
            p.std_error.to_string(),
            p.chance_level.to_string(),
            p.mean_abs_error_s.to_string(),
            th,
            counts,
            "ok".into(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    for s in &report.skipped {
        let mut row = vec![String::new(); 17];
        row[3] = s.point.l_t_s.to_string();
        row[4] = s.point.l_r_s.to_string();
        row[5] = s.point.delta_spp.to_string();
        row[6] = s.point.snr_db.to_string();
        row[16] = format!("skipped: {}", s.reason);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| EnfError::io(path, e))
}

/// Every trial of every grid point.
pub fn write_trials_csv(report: &AccuracyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "l_t_s", "l_r_s", "delta_spp", "snr_db", "trial", "k0", "k_hat", "abs_error_samples",
        "success", "best_metric_value",
    ])
    .map_err(|e| csv_err(path, e))?;
    for p in &report.points {
        for t in &p.trial_results {
            w.write_record([
                p.point.l_t_s.to_string(),
                p.point.l_r_s.to_string(),
                p.point.delta_spp.to_string(),
                p.point.snr_db.to_string(),
                t.trial_index.to_string(),
                t.k0.to_string(),
                t.k_hat.to_string(),
                t.abs_error_samples.to_string(),
                t.success.to_string(),
                t.best_metric_value.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| EnfError::io(path, e))
}

const FACTORS: [&str; 4] = ["l_t_s", "l_r_s", "delta_spp", "snr_db"];

fn factor(p: &GridPoint, i: usize) -> f64 {
    [p.l_t_s, p.l_r_s, p.delta_spp, p.snr_db][i]
}

/// Writes `accuracy_vs_<factor>.dat` for every factor that takes more than
/// one value. Each file holds one gnuplot data block per combination of the
/// remaining factors, separated by two blank lines so `index` can pick them.
pub fn write_gnuplot_files(report: &AccuracyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, name) in FACTORS.iter().enumerate() {
        let mut distinct: Vec<u64> = report.points.iter().map(|p| factor(&p.point, i).to_bits()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            continue;
        }
        let mut blocks: BTreeMap<Vec<u64>, Vec<&PointReport>> = BTreeMap::new();
        for p in &report.points {
            let key = (0..4).filter(|&j| j != i).map(|j| factor(&p.point, j).to_bits()).collect();
            blocks.entry(key).or_default().push(p);
        }
        let mut text = String::new();
        for (n, rows) in blocks.values_mut().enumerate() {
            rows.sort_by(|a, b| factor(&a.point, i).total_cmp(&factor(&b.point, i)));
            if n > 0 {
                text.push_str("\n\n");
            }
            let fixed: Vec<String> = (0..4)
                .filter(|&j| j != i)
                .map(|j| format!("{}={}", FACTORS[j], factor(&rows[0].point, j)))
                .collect();
            let _ = writeln!(text, "# {}", fixed.join(" "));
            let _ = writeln!(text, "# {name} accuracy std_error chance_level");
            for r in rows.iter() {
                let _ = writeln!(
                    text,
                    "{} {} {} {}",
                    factor(&r.point, i),
                    r.accuracy,
                    r.std_error,
                    r.chance_level
                );
            }
        }
        let path = dir.join(format!("accuracy_vs_{name}.dat"));
        std::fs::write(&path, text).map_err(|e| EnfError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{sweep, ExperimentSpec, FactorGrid};

    fn small_report() -> AccuracyReport {
        let base = ExperimentSpec {
            l_r_s: 600.0,
            trials: 3,
            ..Default::default()
        };
        let grid = FactorGrid {
            l_t_s: vec![60.0, 120.0, 6000.0],
            snr_db: vec![-20.0, 0.0],
            ..Default::default()
        };
        sweep(&base, &grid).unwrap()
    }

    #[test]
    fn writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let report = small_report();
        write_report_csv(&report, &dir.path().join("report.csv")).unwrap();
        write_trials_csv(&report, &dir.path().join("trials.csv")).unwrap();
        let files = write_gnuplot_files(&report, dir.path()).unwrap();

        let summary = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1 + 4 + 2);
        assert!(summary.lines().last().unwrap().contains("skipped"));

        let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
        assert_eq!(trials.lines().count(), 1 + 4 * 3);

        assert_eq!(files.len(), 2);
        let dat = std::fs::read_to_string(dir.path().join("accuracy_vs_l_t_s.dat")).unwrap();
        assert_eq!(dat.matches("# l_r_s=").count(), 2);
        let data_lines = dat.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).count();
        assert_eq!(data_lines, 4);
    }
}
