use harness::fit::{fit_oscillation, FitError, Kappa};
use harness::rate::{rate_estimate, RateError};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

#[test]
fn noise_perturbs_amplitudes_boundedly() {
    let k = 0.9;
    let mut rng = StdRng::seed_from_u64(7);
    let s: Vec<(usize, f64)> = (32..96)
        .map(|n| {
            let x = n as f64;
            (n, 0.4 * (2.0 * k * x).cos() - 0.25 * (2.0 * k * x).sin() + 0.3 / x + rng.gen_range(-1e-8..1e-8))
        })
        .collect();
    let f = fit_oscillation(&s, Kappa::Fixed(k)).unwrap();
    assert!((f.amplitude_cos - 0.4).abs() < 1e-7);
    assert!((f.amplitude_sin + 0.25).abs() < 1e-7);
}

#[test]
fn free_frequency_is_found() {
    let s: Vec<(usize, f64)> = (20..60).map(|n| (n, 0.7 * (PI / 2.0 * n as f64).cos() + 0.1 / n as f64)).collect();
    let f = fit_oscillation(&s, Kappa::Free).unwrap();
    assert!((f.fitted_frequency - PI / 2.0).abs() < 1e-6, "{}", f.fitted_frequency);
    assert!((f.amplitude_cos - 0.7).abs() < 1e-6);
}

#[test]
fn non_finite_input_is_rejected() {
    let mut s: Vec<(usize, f64)> = (1..10).map(|n| (n, 1.0)).collect();
    s[3].1 = f64::NAN;
    assert_eq!(fit_oscillation(&s, Kappa::Fixed(0.3)), Err(FitError::NonFinite(4)));
}

#[test]
fn noisy_one_over_n() {
    let mut rng = StdRng::seed_from_u64(11);
    let ns: Vec<f64> = (4..12).map(|k| 2f64.powi(k)).collect();
    let e: Vec<f64> = ns.iter().map(|n| 3.0 / n * (1.0 + rng.gen_range(-0.2..0.2))).collect();
    let r = rate_estimate(&ns, &e).unwrap();
    assert!(r.slope > -1.2 && r.slope < -0.8, "{}", r.slope);
    assert!(r.interval.0 <= r.slope && r.slope <= r.interval.1);
}

#[test]
fn constant_errors_have_zero_slope() {
    let r = rate_estimate(&[8.0, 16.0, 32.0], &[0.5, 0.5, 0.5]).unwrap();
    assert!(r.slope.abs() < 1e-12);
}

#[test]
fn negative_error_rejected() {
    assert!(matches!(rate_estimate(&[1.0, 2.0, 3.0], &[1.0, -1.0, 1.0]), Err(RateError::NonPositive { index: 1, .. })));
}

proptest! {
    #[test]
    fn least_squares_never_worse_than_zero_fit(vals in proptest::collection::vec(-1.0f64..1.0, 8..30), k in 0.05f64..1.5) {
        let s: Vec<(usize, f64)> = vals.iter().enumerate().map(|(i, &v)| (i + 10, v)).collect();
        let f = fit_oscillation(&s, Kappa::Fixed(k)).unwrap();
        let zero = (vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64).sqrt();
        prop_assert!(f.residual_rms <= zero + 1e-12);
    }

    #[test]
    fn exact_power_laws(c in 0.01f64..100.0, a in -4.0f64..1.0) {
        let ns = [16.0, 32.0, 64.0, 128.0];
        let e: Vec<f64> = ns.iter().map(|n: &f64| c * n.powf(a)).collect();
        prop_assert!((rate_estimate(&ns, &e).unwrap().slope - a).abs() < 1e-9);
    }
}
