use enf_core::estimation::{estimate_if, EstimatorConfig};
use enf_core::harness::a_versus_delta;
use enf_core::model::{autocorrelation, energy_density_spectrum, fit_ar1, synthesize_ar1, Ar1Params, EnfSeries};
use enf_core::synthesis::{
    add_awgn, synthesize_noisy_enf_tfd, synthesize_tad, upsample_enf, TadSignal, TadSynthesisParams,
    TfdNoiseParams,
};
use proptest::prelude::*;

fn ar(a: f64, sigma: f64) -> Ar1Params {
    Ar1Params::new(a, sigma).unwrap()
}

#[test]
fn fit_recovers_a_with_small_innovations() {
    let mean: f64 = (0..100)
        .map(|seed| {
            let s = synthesize_ar1(4600, ar(0.99, 0.001), 1.0, 50.0, seed).unwrap();
            fit_ar1(&s.slice(1000, 3600).unwrap()).unwrap().a
        })
        .sum::<f64>()
        / 100.0;
    assert!((0.985..=0.995).contains(&mean), "{mean}");
}

#[test]
fn long_run_statistics_match_the_model() {
    let p = ar(0.99, 0.01);
    let s = synthesize_ar1(1_001_000, p, 1.0, 0.0, 42).unwrap();
    let s = s.slice(1000, 1_000_000).unwrap();
    let r = autocorrelation(s.samples(), 100);
    let var = r[0];
    assert!((var / p.stationary_variance() - 1.0).abs() < 0.05, "{var}");
    for k in 1..=100 {
        let expected = 0.99f64.powi(k as i32);
        assert!((r[k] / r[0] / expected - 1.0).abs() < 0.10, "lag {k}");
    }
}

#[test]
fn ar_spectrum_is_concentrated_at_low_frequency() {
    let s = synthesize_ar1(8200, ar(0.99, 0.007), 1.0, 50.0, 5).unwrap();
    let s = s.slice(1000, 7200).unwrap();
    let spec = energy_density_spectrum(&s, 7200).unwrap();
    let at = spec.energy_db[spec.bin_nearest(0.05)];
    assert!(at <= -20.0, "{at} dB");
}

#[test]
fn fitted_a_falls_with_decimation() {
    let factors: Vec<usize> = (1..=40).collect();
    let curve = a_versus_delta(ar(0.99, 0.007), &factors, 86_400, 20, 11).unwrap();
    assert!(curve[0].1 >= 0.98, "{:?}", curve[0]);
    for w in curve.windows(2) {
        assert!(w[1].1 <= w[0].1, "{w:?}");
    }
}

#[test]
fn awgn_realizes_requested_snr() {
    let n = 1_000_000;
    // cos at a quarter of the sample rate has unit power over whole periods.
    let s: Vec<f64> = (0..n).map(|i| std::f64::consts::SQRT_2 * (i as f64 * 0.5 * std::f64::consts::PI).cos()).collect();
    let sig = TadSignal::new(s, 400.0).unwrap();
    let noisy = add_awgn(&sig, 1.0, 3).unwrap();
    let noise: f64 = noisy
        .samples()
        .iter()
        .zip(sig.samples())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let ratio = sig.energy() / noise;
    assert!((0.99..=1.01).contains(&ratio), "{ratio}");
}

#[test]
fn vanishing_tfd_noise_leaves_input() {
    let s = synthesize_ar1(1000, ar(0.99, 0.007), 1.0, 50.0, 1).unwrap();
    let p = TfdNoiseParams {
        snr_linear: 1e12,
        frame_len_samples: 400,
        sample_rate_hz: 400.0,
    };
    let out = synthesize_noisy_enf_tfd(&s, &p, 2).unwrap();
    for (a, b) in out.samples().iter().zip(s.samples()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn synthesis_and_estimation_round_trip() {
    // AR(1) ENF confined to about 50 ± 0.02 Hz.
    let enf = synthesize_ar1(1200, ar(0.99, 0.0008), 1.0, 50.0, 8).unwrap();
    assert!(enf.samples().iter().all(|f| (f - 50.0).abs() < 0.03));
    let fs = 400.0;
    let up = upsample_enf(&enf, fs).unwrap();
    let tad = synthesize_tad(&up, &TadSynthesisParams::new(fs)).unwrap();
    let cfg = EstimatorConfig::default();
    let est = estimate_if(&tad, &cfg).unwrap();

    let frame = cfg.frame_len_samples(fs);
    let hop = cfg.hop_samples(fs);
    let sq: f64 = est
        .samples()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let window = &up.samples()[i * hop..i * hop + frame];
            let mean = window.iter().sum::<f64>() / frame as f64;
            (f - mean).powi(2)
        })
        .sum();
    let rms = (sq / est.len() as f64).sqrt();
    assert!(rms < 1e-3, "{rms}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_is_bit_reproducible(seed in any::<u64>(), len in 1usize..500, a in -0.999f64..0.999) {
        let p = ar(a, 0.01);
        let x = synthesize_ar1(len, p, 1.0, 50.0, seed).unwrap();
        let y = synthesize_ar1(len, p, 1.0, 50.0, seed).unwrap();
        prop_assert_eq!(x.samples(), y.samples());
    }

    #[test]
    fn upsampling_preserves_duration(n in 1usize..50, delta in 0.1f64..3.0, rate in 1.0f64..50.0) {
        prop_assume!(rate * delta >= 1.0);
        let enf = EnfSeries::new((0..n).map(|i| 50.0 + i as f64 * 1e-3).collect(), delta, 50.0).unwrap();
        let up = upsample_enf(&enf, rate).unwrap();
        let expected = n as f64 * delta * rate;
        prop_assert!((up.len() as f64 - expected).abs() <= 1.0);
    }
}
