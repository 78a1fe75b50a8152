use enf_core::estimation::{estimate_if, frame_count, EstimatorConfig};
use enf_core::matching::{census_similar, match_cc, match_mse, CensusConfig, Matcher, Strategy as Scan};
use enf_core::model::EnfSeries;
use enf_core::synthesis::TadSignal;
use proptest::prelude::*;

fn series(v: Vec<f64>) -> EnfSeries {
    EnfSeries::new(v, 1.0, 50.0).unwrap()
}

/// Reference of 50 Hz plus small bounded fluctuation, and a test window
/// position inside it.
fn instance(max_ref: usize) -> impl Strategy<Value = (Vec<f64>, usize, usize)> {
    (3usize..max_ref).prop_flat_map(|n| {
        (
            prop::collection::vec(-0.05f64..0.05, n).prop_map(|v| v.into_iter().map(|x| 50.0 + x).collect()),
            2usize..=n.min(64),
        )
            .prop_flat_map(move |(r, len)| (Just(r), Just(len), 0..=n - len))
    })
    .prop_map(|(r, len, k0)| (r, len, k0))
}

fn brute_mse_argmin(t: &[f64], r: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for k in 0..=r.len() - t.len() {
        let v: f64 = t.iter().zip(&r[k..]).map(|(a, b)| (a - b) * (a - b)).sum();
        if v < best.0 {
            best = (v, k);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embedded_segment_is_a_perfect_match((r, len, k0) in instance(300)) {
        let t = r[k0..k0 + len].to_vec();
        let mse = match_mse(&series(t.clone()), &series(r.clone())).unwrap();
        prop_assert_eq!(mse.best_value, 0.0);
        prop_assert_eq!(mse.trace[k0], 0.0);
        let cc = match_cc(&series(t), &series(r)).unwrap();
        prop_assert!((cc.best_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cc_is_invariant_under_positive_affine_maps(
        (r, len, k0) in instance(300),
        alpha in 0.01f64..100.0,
        beta in -100.0f64..100.0,
        noise in prop::collection::vec(-0.01f64..0.01, 64),
    ) {
        let t: Vec<f64> = r[k0..k0 + len].iter().zip(&noise).map(|(v, n)| v + n).collect();
        prop_assume!(t.iter().any(|&v| v != t[0]));
        let mapped: Vec<f64> = t.iter().map(|v| alpha * (v - 50.0) + beta + 50.0).collect();
        let a = match_cc(&series(t.clone()), &series(r.clone())).unwrap();
        let b = match_cc(&series(mapped.clone()), &series(r.clone())).unwrap();
        // Exact ties (e.g. mostly flat references) may resolve either way
        // after rounding, so each winner need only be optimal in the other.
        prop_assert!((b.trace[a.k_hat] - b.best_value).abs() < 1e-9);
        prop_assert!((a.trace[b.k_hat] - a.best_value).abs() < 1e-9);
        for (x, y) in a.trace.iter().zip(&b.trace) {
            prop_assert!((x.is_nan() && y.is_nan()) || (x - y).abs() < 1e-9);
        }
        let cfg = CensusConfig { thresholds: vec![0.0, 0.5, 0.9] };
        let ca = census_similar(&series(t), &series(r.clone()), &cfg).unwrap();
        let cb = census_similar(&series(mapped), &series(r), &cfg).unwrap();
        // Counts can only differ for values within rounding of a threshold.
        for (x, y) in ca.counts.iter().zip(&cb.counts) {
            prop_assert!(x.abs_diff(*y) <= 1);
        }
    }

    #[test]
    fn mse_trace_is_shift_covariant((r, len, k0) in instance(300), c in -10.0f64..10.0) {
        let t: Vec<f64> = r[k0..k0 + len].iter().map(|v| v + 0.001).collect();
        let a = match_mse(&series(t.clone()), &series(r.clone())).unwrap();
        let shift = |v: &[f64]| v.iter().map(|x| x + c).collect::<Vec<_>>();
        let b = match_mse(&series(shift(&t)), &series(shift(&r))).unwrap();
        for (x, y) in a.trace.iter().zip(&b.trace) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn fft_and_direct_paths_agree((r, len, k0) in instance(1000), noise in prop::collection::vec(-0.02f64..0.02, 64)) {
        let t: Vec<f64> = r[k0..k0 + len].iter().zip(&noise).map(|(v, n)| v + n).collect();
        prop_assume!(t.iter().any(|&v| v != t[0]));
        let (t, r) = (series(t), series(r));
        let direct = Matcher::new(Scan::Direct);
        let fft = Matcher::new(Scan::Fft);
        let (m1, m2) = (direct.mse(&t, &r).unwrap(), fft.mse(&t, &r).unwrap());
        prop_assert_eq!(m1.k_hat, m2.k_hat);
        for (x, y) in m1.trace.iter().zip(&m2.trace) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
        let (c1, c2) = (direct.cc(&t, &r).unwrap(), fft.cc(&t, &r).unwrap());
        prop_assert_eq!(c1.k_hat, c2.k_hat);
        for (x, y) in c1.trace.iter().zip(&c2.trace) {
            prop_assert!((x.is_nan() && y.is_nan()) || (x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn scans_are_deterministic((r, len, k0) in instance(500)) {
        let mut t = r[k0..k0 + len].to_vec();
        t[0] += 0.003;
        let (t, r) = (series(t), series(r));
        for s in [Scan::Direct, Scan::Fft, Scan::Auto] {
            let m = Matcher::new(s);
            prop_assert_eq!(m.cc(&t, &r).unwrap(), m.cc(&t, &r).unwrap());
            prop_assert_eq!(m.mse(&t, &r).unwrap(), m.mse(&t, &r).unwrap());
        }
    }

    #[test]
    fn mse_matches_brute_force_on_small_instances(
        r in prop::collection::vec(49.9f64..50.1, 200),
        t in prop::collection::vec(49.9f64..50.1, 20),
    ) {
        let out = match_mse(&series(t.clone()), &series(r.clone())).unwrap();
        prop_assert_eq!(out.k_hat, brute_mse_argmin(&t, &r));
        prop_assert_eq!(out.num_offsets, 181);
    }

    #[test]
    fn estimate_length_depends_only_on_geometry(
        n in 800usize..4000,
        frame_s in 1.0f64..4.0,
        step_s in 0.25f64..2.0,
        tone in 49.5f64..50.5,
        scale in 0.1f64..10.0,
    ) {
        let cfg = EstimatorConfig { frame_len_s: frame_s, step_s, ..Default::default() };
        let fs = 400.0;
        let fl = cfg.frame_len_samples(fs);
        prop_assume!(n >= fl && step_s <= frame_s);
        let sig: Vec<f64> = (0..n).map(|i| scale * (std::f64::consts::TAU * tone * i as f64 / fs).cos()).collect();
        let other: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
        let a = estimate_if(&TadSignal::new(sig, fs).unwrap(), &cfg).unwrap();
        let b = estimate_if(&TadSignal::new(other, fs).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        prop_assert_eq!(a.len(), frame_count(n, fl, cfg.hop_samples(fs)));
        for f in a.samples().iter().chain(b.samples()) {
            prop_assert!((49.0..=51.0).contains(f));
        }
    }
}
