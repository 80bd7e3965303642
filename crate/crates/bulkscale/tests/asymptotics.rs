use bulkscale::asymptotics::{
    g0, g0_quadrature, g_beta, g_beta_polylog, hhat_coeffs, laplace_expand, laplace_integral, li_three_half,
    predict_deformed, predict_ground, szego_h, AsymError, PredictionSet, QoscSource,
};
use bulkscale::equilibrium::{solve_equilibrium, EquilibriumData, PotentialSpec};
use bulkscale::modelrhp::perturbative_q;
use bulkscale::numerics::{Poly, Precision, XReal};
use bulkscale::orthopoly::{Deformation, DeformationSpec, EnsembleSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn p() -> Precision {
    Precision::default()
}

fn x(v: f64) -> XReal {
    XReal::from_f64(v, p())
}

fn semicircle() -> EquilibriumData {
    solve_equilibrium(&PotentialSpec::from_f64(&[0.0, 0.0, 2.0], p()).unwrap(), p()).unwrap()
}

/// Trapezoid rule for ∫_ℝ u^β log(1 + e^{−y−u²}) du in plain f64.
fn trapezoid_g(beta: i32, y: f64) -> f64 {
    let h = 0.02;
    let lim = 12.0 + (-y).max(0.0).sqrt();
    let k = (lim / h) as i64;
    (-k..=k)
        .map(|i| {
            let u = i as f64 * h;
            let z = -y - u * u;
            let l = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            u.powi(beta) * l
        })
        .sum::<f64>()
        * h
}

/// log-log slope by least squares.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

#[test]
fn li_three_half_at_minus_one_is_eta() {
    // −(1 − 2^{−1/2}) ζ(3/2)
    let zeta = 2.612_375_348_685_488_3;
    let eta = (1.0 - 0.5f64.sqrt()) * zeta;
    let li = li_three_half(&x(-1.0)).unwrap().to_f64();
    assert!((li + eta).abs() < 1e-14, "{li}");
    assert!((li + 0.765147).abs() < 1e-6);
}

#[test]
fn g0_polylog_matches_independent_trapezoid() {
    for s in [0.0, 1.0, 5.0] {
        let poly = g0(&x(s)).unwrap().to_f64();
        let trap = trapezoid_g(0, s);
        assert!((poly - trap).abs() < 1e-13, "s={s}: {poly} vs {trap}");
    }
    assert!((g0(&x(0.0)).unwrap().to_f64() - 1.35619).abs() < 1e-5);
}

#[test]
fn g0_two_routes_agree() {
    for s in [0.0, 1.0, 5.0] {
        let a = g0(&x(s)).unwrap();
        let b = g0_quadrature(&x(s)).unwrap();
        assert!((a - b).abs().to_f64() < 1e-40, "s={s}");
    }
    // negative s only has the quadrature route; check it against the trapezoid
    let neg = g0(&x(-3.0)).unwrap().to_f64();
    assert!((neg - trapezoid_g(0, -3.0)).abs() < 1e-12);
}

#[test]
fn g0_large_s_asymptote() {
    let sp = std::f64::consts::PI.sqrt();
    let mut last = f64::INFINITY;
    for s in [5.0, 10.0, 20.0, 30.0] {
        let r = g0(&x(s)).unwrap().to_f64() / (sp * (-s).exp());
        let gap = (r - 1.0).abs();
        assert!(gap < last);
        last = gap;
    }
    // next term is −e^{−s}/2^{3/2}
    assert!(last < 1e-13);
}

#[test]
fn g_beta_two_routes() {
    for beta in [2usize, 4] {
        for y in [0.0, 1.0, 5.0] {
            let q = g_beta(beta, &x(y)).unwrap();
            let l = g_beta_polylog(beta, &x(y)).unwrap();
            assert!((&q - &l).abs().to_f64() < 1e-40, "β={beta} y={y}");
        }
    }
    // β = 2, y = 0 against the plain trapezoid
    let v = g_beta(2, &x(0.0)).unwrap().to_f64();
    assert!((v - trapezoid_g(2, 0.0)).abs() < 1e-12);
    assert!(g_beta(3, &x(0.4)).unwrap().is_zero());
    assert!((g_beta(0, &x(1.0)).unwrap() - g0(&x(1.0)).unwrap()).abs().to_f64() < 1e-40);
}

#[test]
fn laplace_single_term_for_pure_quadratic() {
    let f = Poly::from_f64(&[0.0, 0.0, 1.0], p());
    let g = Poly::from_f64(&[1.0], p());
    let y = x(0.3);
    let e = laplace_expand(&g, &f, &y, 3, (-1.0, 1.0)).unwrap();
    // v ≡ 1 so ĝ = g
    assert!((&e.ghat[0] - 1.0).abs().to_f64() < 1e-50);
    assert!(e.ghat[1..].iter().all(|c| c.abs().to_f64() < 1e-50));
    let t = x(200.0);
    let direct = laplace_integral(&g, &f, &y, &t, (-1.0, 1.0)).unwrap();
    let single = g0(&y).unwrap() / t.sqrt();
    assert!((&direct - &single).abs().to_f64() < 1e-50);
    assert!((e.eval(&t) - single).abs().to_f64() < 1e-50);
}

#[test]
fn laplace_odd_g_vanishes() {
    let f = Poly::from_f64(&[0.0, 0.0, 1.0], p());
    let g = Poly::from_f64(&[0.0, 1.0], p());
    let e = laplace_expand(&g, &f, &x(0.0), 3, (-1.0, 1.0)).unwrap();
    assert!(e.eval(&x(50.0)).is_zero());
}

#[test]
fn laplace_quartic_error_slope() {
    let f = Poly::from_f64(&[0.0, 0.0, 1.0, 0.3, 0.2], p());
    let g = Poly::from_f64(&[1.0, 0.5, 0.7, -0.2], p());
    let y = x(0.5);
    let win = (-1.0, 1.0);
    let e = laplace_expand(&g, &f, &y, 4, win).unwrap();
    let ts = [1e2, 1e3, 1e4];
    let direct: Vec<XReal> = ts.iter().map(|&t| laplace_integral(&g, &f, &y, &x(t), win).unwrap()).collect();
    for last in 0..=2 {
        let errs: Vec<f64> = ts
            .iter()
            .zip(&direct)
            .map(|(&t, d)| (d - &e.eval_truncated(&x(t), last)).abs().to_f64())
            .collect();
        let sl = slope(&ts, &errs);
        let want = -(last as f64 + 1.5);
        assert!((sl - want).abs() < 0.2, "N={last}: slope {sl}, errors {errs:?}");
    }
}

#[test]
fn laplace_rejects_bad_phase() {
    let g = Poly::from_f64(&[1.0], p());
    let concave = Poly::from_f64(&[0.0, 0.0, -1.0], p());
    assert!(matches!(laplace_expand(&g, &concave, &x(0.0), 2, (-1.0, 1.0)), Err(AsymError::Reversion(_))));
    let double_well = Poly::from_f64(&[0.0, 0.0, 1.0, 0.0, -1.0], p());
    assert!(matches!(
        laplace_expand(&g, &double_well, &x(0.0), 2, (-1.5, 1.5)),
        Err(AsymError::NotUniqueMinimum { .. })
    ));
    let shifted = Poly::from_f64(&[0.0, 1.0, 1.0], p());
    assert!(matches!(laplace_expand(&g, &shifted, &x(0.0), 2, (-1.0, 1.0)), Err(AsymError::NotCritical)));
}

#[test]
fn hhat_for_semicircle() {
    let eq = semicircle();
    let h = hhat_coeffs(&eq, &x(0.0), &x(1.0)).unwrap();
    let want = 1.35619 / (2.0 * std::f64::consts::PI);
    assert!((h.h0.to_f64() - want).abs() < 1e-5);
    assert!((h.h0.to_f64() - 0.215845).abs() < 2e-6, "{}", h.h0.to_f64());
    assert!(h.h1.abs().to_f64() < 1e-50);
    // ĥ(z) → ĥ₀ at infinity and is single-valued off [a, b]
    let far = h.eval(C64::new(1e6, 0.0));
    assert!((far.re - h.h0.to_f64()).abs() < 1e-6);
    let left = h.eval(C64::new(-1e6, 0.0));
    assert!((left.re - h.h0.to_f64()).abs() < 1e-6);
    let up = h.eval(C64::new(0.3, 1e-9));
    let dn = h.eval(C64::new(0.3, -1e-9));
    assert!((up + dn).norm() < 1e-6, "boundary values are opposite on the cut");
    // s → ∞ asymptote
    let big = hhat_coeffs(&eq, &x(25.0), &x(1.0)).unwrap().h0.to_f64();
    let asym = std::f64::consts::PI.sqrt() * (-25.0f64).exp() / (2.0 * std::f64::consts::PI);
    assert!((big / asym - 1.0).abs() < 1e-9);
}

#[test]
fn ground_prediction_for_semicircle() {
    let eq = semicircle();
    for n in [1, 7, 64] {
        let (g, b) = predict_ground(&eq, n);
        assert!((g - 0.25).abs().to_f64() < 1e-50);
        assert!(b.abs().to_f64() < 1e-50);
    }
}

#[test]
fn deformed_prediction_is_alternating_q_over_n() {
    let eq = semicircle();
    let q = -6.78e-4;
    for n in [32usize, 33, 128] {
        let (g, b) = predict_deformed(&eq, &x(1.0), &x(2.0), q, n).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let dg = (g - 0.25).to_f64();
        assert!((dg - sign * q / n as f64).abs() < 1e-18, "n={n}");
        assert!(b.abs().to_f64() < 1e-40);
    }
}

#[test]
fn deformed_prediction_tends_to_ground() {
    let eq = semicircle();
    let n = 48;
    let (gi, _) = predict_ground(&eq, n);
    let mut last = f64::INFINITY;
    for s in [5.0, 10.0, 20.0, 30.0] {
        let q = perturbative_q(s, 2.0);
        let (g, _) = predict_deformed(&eq, &x(1.0), &x(s), q, n).unwrap();
        let gap = (g - &gi).abs().to_f64();
        assert!(gap < last && gap <= 2.0 * (-s).exp() / n as f64);
        last = gap;
    }
    assert!(last < 1e-13 / n as f64);
}

#[test]
fn prediction_set_records_ingredients() {
    let eq = semicircle();
    let set = PredictionSet::build(&eq, &x(1.0), &x(2.0), -6.78e-4, QoscSource::ModelRhp, &[32, 48]).unwrap();
    let ing = &set.ingredients;
    assert!((ing.big_t - 2.0).abs() < 1e-14);
    assert!((ing.kappa - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    assert!((ing.q_a - 2.0).abs() < 1e-14 && (ing.q_b - 2.0).abs() < 1e-14);
    assert_eq!(set.gamma_sq_s.len(), 2);
    for i in 0..2 {
        assert!((set.gamma_sq_s[i] - set.gamma_sq_inf[i]).abs() < 1e-4);
    }
}

#[test]
fn szego_h0_rate() {
    let eq = semicircle();
    let v = PotentialSpec::from_f64(&[0.0, 0.0, 2.0], p()).unwrap();
    let s = x(0.5);
    let hh = hhat_coeffs(&eq, &s, &x(1.0)).unwrap();
    let ns = [16usize, 32, 64, 128];
    let mut errs = Vec::new();
    for &n in &ns {
        let d = Deformation::Fermi(DeformationSpec::new(Poly::from_f64(&[0.0, 0.0, 1.0], p()), s.clone()).unwrap());
        let spec = EnsembleSpec::new(v.clone(), d, n).unwrap();
        let (h0, h1) = szego_h(&spec, &eq).unwrap();
        // log σ_n < 0, so h₀(n) tracks −ĥ₀/n
        assert!(h0.is_negative());
        assert!(h1.abs().to_f64() < 1e-40);
        errs.push((h0 + &hh.h0 / n as f64).abs().to_f64());
    }
    let nsf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let sl = slope(&nsf, &errs);
    assert!(sl <= -2.5, "slope {sl}, errors {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn g0_decreasing_and_routes_agree(s in 0.0f64..8.0, ds in 0.05f64..1.0) {
        let a = g0(&x(s)).unwrap();
        let b = g0(&x(s + ds)).unwrap();
        prop_assert!(b < a);
        let q = g0_quadrature(&x(s)).unwrap();
        prop_assert!((&a - &q).abs().to_f64() < 1e-40);
    }
}
