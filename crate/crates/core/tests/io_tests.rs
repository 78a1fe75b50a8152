use chrono::{DateTime, Duration, Utc};
use enf_core::io::{read_tad, write_enf_csv, write_tad, InputKind, ReferenceStore};
use enf_core::matching::match_cc;
use enf_core::model::{synthesize_ar1, Ar1Params};
use enf_core::synthesis::TadSignal;

fn t(s: &str) -> DateTime<Utc> {
    s.parse().unwrap()
}

#[test]
fn matched_offset_maps_to_wall_clock_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = ReferenceStore::open(dir.path().join("store")).unwrap();
    let day = synthesize_ar1(86_400, Ar1Params::new(0.99, 0.007).unwrap(), 1.0, 50.0, 3).unwrap();
    // Spans a month boundary, so it lands in two shards.
    let t0 = t("2022-03-31T12:00:00Z");
    store.ingest_enf(&day, "UK", t0).unwrap();

    let from = t("2022-03-31T18:00:00Z");
    let fetched = store.fetch("UK", from, from + Duration::hours(12)).unwrap();
    let reference = fetched.data.as_enf().unwrap();
    assert_eq!(reference.len(), 12 * 3600);

    let s = 20_000;
    let test = day.slice(6 * 3600 + s, 300).unwrap();
    let k_hat = match_cc(&test, reference).unwrap().k_hat;
    assert_eq!(k_hat, s);
    assert_eq!(fetched.utc_of_offset(k_hat), from + Duration::seconds(s as i64));
}

#[test]
fn store_survives_reopening_and_file_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let enf = synthesize_ar1(7200, Ar1Params::new(0.99, 0.007).unwrap(), 1.0, 60.0, 1).unwrap();
    write_enf_csv(&enf, &csv).unwrap();
    let root = dir.path().join("store");
    {
        let mut store = ReferenceStore::open(&root).unwrap();
        store
            .ingest(&csv, InputKind::EnfCsv, "US-E", t("2020-06-01T00:00:00Z"), 60.0)
            .unwrap();
    }
    let store = ReferenceStore::open(&root).unwrap();
    assert_eq!(store.segments().len(), 1);
    let got = store
        .fetch("US-E", t("2020-06-01T01:00:00Z"), t("2020-06-01T02:00:00Z"))
        .unwrap();
    let got = got.data.as_enf().unwrap();
    assert_eq!(got.samples(), &enf.samples()[3600..7200]);
    assert_eq!(got.nominal_hz(), 60.0);
}

#[test]
fn waveforms_round_trip_through_files_and_store() {
    let dir = tempfile::tempdir().unwrap();
    let fs = 400.0;
    let x: Vec<f64> = (0..8000)
        .map(|i| (std::f64::consts::TAU * 50.0 * i as f64 / fs).cos() * 0.5)
        .collect();
    let sig = TadSignal::new(x, fs).unwrap();

    let enft = dir.path().join("x.enft");
    write_tad(&sig, &enft).unwrap();
    assert_eq!(read_tad(&enft).unwrap(), sig);

    let wav = dir.path().join("x.wav");
    write_tad(&sig, &wav).unwrap();
    let back = read_tad(&wav).unwrap();
    assert_eq!(back.sample_rate_hz(), fs);
    // 16-bit quantization relative to the peak.
    for (a, b) in back.samples().iter().zip(sig.samples()) {
        assert!((a / 0.5 - b / 0.5).abs() < 1e-4);
    }

    let mut store = ReferenceStore::open(dir.path().join("store")).unwrap();
    let start = t("2023-01-01T00:00:00Z");
    store.ingest(&enft, InputKind::Enft, "DE", start, 50.0).unwrap();
    let got = store.fetch("DE", start + Duration::seconds(5), start + Duration::seconds(10)).unwrap();
    assert_eq!(got.data.as_tad().unwrap().samples(), &sig.samples()[2000..4000]);
}
