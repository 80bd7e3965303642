use bulkscale::equilibrium::{solve_equilibrium, PotentialSpec};
use bulkscale::numerics::quad::{graded_panels, graded_panels_rev, to_xpanels};
use bulkscale::numerics::{composite_quad, Precision, XReal};
use proptest::prelude::*;

fn p() -> Precision {
    Precision::default()
}

/// −∫ log|x − y| φ_V(y) dy by brute-force graded quadrature around the singularity.
fn log_potential_oracle(eq: &bulkscale::equilibrium::EquilibriumData, x: f64) -> f64 {
    let pr = Precision::digits(50);
    let (a, b) = (eq.a.to_f64(), eq.b.to_f64());
    let mut panels = Vec::new();
    // endpoint square-root behaviour and the log point both get graded panels
    let mut cuts = vec![a, b];
    if x > a && x < b {
        cuts.push(x);
    }
    cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        panels.extend(graded_panels(w[0], mid, 1e-12, 2.0, 0.05));
        panels.extend(graded_panels_rev(mid, w[1], 1e-12, 2.0, 0.05));
    }
    let xp = XReal::from_f64(x, pr);
    let v = composite_quad(
        |y| {
            let d = (&xp - y).abs();
            if d.is_zero() {
                return y.lift(0.0);
            }
            -(d.ln() * eq.density(&y.with_precision(eq.precision)).with_precision(pr))
        },
        &to_xpanels(&panels, pr),
        30,
        pr,
    )
    .unwrap();
    v.to_f64()
}

#[test]
fn semicircle_for_two_x_squared() {
    let v = PotentialSpec::from_f64(&[0.0, 0.0, 2.0], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    assert!((&eq.a + 1.0).abs().to_f64() < 1e-55);
    assert!((&eq.b - 1.0).abs().to_f64() < 1e-55);
    assert_eq!(eq.q_poly.degree(), 0);
    assert!((&eq.q_poly.c[0] - 2.0).abs().to_f64() < 1e-55);
    let two_over_pi = XReal::from_f64(2.0, p()) / XReal::pi(p());
    assert!((&eq.phi_v0 - &two_over_pi).abs().to_f64() < 1e-55);
    let half_pi = XReal::pi(p()) * 0.5;
    assert!((&eq.kappa - &half_pi).abs().to_f64() < 1e-50);
    assert!((eq.total_mass() - 1.0).abs().to_f64() < 1e-50);
    let x = XReal::from_f64(0.3, p());
    let dens = eq.density(&x).to_f64();
    assert!((dens - 2.0 / std::f64::consts::PI * (1.0f64 - 0.09).sqrt()).abs() < 1e-15);
    // ℓ = 1 + 2 log 2 for the semicircle on [−1, 1] with V = 2x²
    assert!((eq.ell.to_f64() - (1.0 + 2.0 * 2f64.ln())).abs() < 1e-14);
}

#[test]
fn half_x_squared_gives_radius_two() {
    let v = PotentialSpec::from_f64(&[0.0, 0.0, 0.5], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    assert!((&eq.a + 2.0).abs().to_f64() < 1e-55);
    assert!((&eq.b - 2.0).abs().to_f64() < 1e-55);
    assert!((&eq.q_poly.c[0] - 0.5).abs().to_f64() < 1e-55);
}

#[test]
fn el_residual_interior_boundary_and_outside() {
    let v = PotentialSpec::from_f64(&[0.0, 0.3, 0.5, -0.1, 0.25], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    let tol = p().eps_with_slack(15);
    for k in 1..20 {
        let x = &eq.a + &((&eq.b - &eq.a) * (k as f64 / 20.0));
        assert!(eq.el_residual(&x).abs().to_f64() < tol, "x={x}");
    }
    assert!(eq.el_residual(&eq.b).abs().to_f64() < tol);
    assert!(eq.el_residual(&eq.a).abs().to_f64() < tol);
    assert!(eq.el_residual(&(&eq.b + 1.0)).is_positive());
    assert!(eq.el_residual(&(&eq.a - 1.0)).is_positive());
}

#[test]
fn closed_form_potential_matches_brute_force_quadrature() {
    let v = PotentialSpec::from_f64(&[0.0, 0.3, 0.5, -0.1, 0.25], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    let (a, b) = (eq.a.to_f64(), eq.b.to_f64());
    for x in [a - 0.7, a + 0.2 * (b - a), 0.0, b - 0.1, b + 0.4] {
        let closed = eq.log_potential(&XReal::from_f64(x, p())).to_f64();
        let oracle = log_potential_oracle(&eq, x);
        assert!((closed - oracle).abs() < 1e-12, "x={x}: {closed} vs {oracle}");
    }
}

#[test]
fn kappa_matches_cosine_series_closed_form() {
    let v = PotentialSpec::from_f64(&[0.0, 0.3, 0.5, -0.1, 0.25], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    // κ = r²[g₀θ₀ + Σ g_k sin(kθ₀)/k] with θ₀ = arccos(−c/r)
    let th0 = (-(&eq.c / &eq.r)).acos();
    let mut s = &eq.g[0] * &th0;
    for k in 1..eq.g.len() {
        s += &(&eq.g[k] * &(&th0 * (k as f64)).sin() / (k as f64));
    }
    let closed = eq.r.sqr() * s;
    assert!((&closed - &eq.kappa).abs().to_f64() < 1e-45);
    let pi = XReal::pi(p());
    let split = &eq.kappa + &eq.kappa_left();
    assert!((split - pi).abs().to_f64() < 1e-45);
    assert!(eq.kappa.is_positive() && eq.kappa < XReal::pi(p()));
}

#[test]
fn effective_params_for_test_ensemble() {
    let v = PotentialSpec::from_f64(&[0.0, 0.0, 2.0], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    let bp = eq.effective_params(&XReal::one(p())).unwrap();
    assert!((&bp.big_t - 2.0).abs().to_f64() < 1e-55);
    assert!((&bp.u - 0.25).abs().to_f64() < 1e-55);
    let bp4 = eq.effective_params(&XReal::from_f64(4.0, p())).unwrap();
    assert!((&bp4.big_t - 1.0).abs().to_f64() < 1e-55);
    assert!(eq.effective_params(&XReal::zero(p())).is_err());
}

#[test]
fn phi0_series_for_semicircle() {
    let v = PotentialSpec::from_f64(&[0.0, 0.0, 2.0], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    let s = eq.phi0_taylor(7);
    // φ₀(x) = ∫₀ˣ 2√(1−t²) dt = 2x − x³/3 − x⁵/20 − x⁷/56
    let expect = [0.0, 2.0, 0.0, -1.0 / 3.0, 0.0, -1.0 / 20.0, 0.0, -1.0 / 56.0];
    for (k, e) in expect.iter().enumerate() {
        assert!((s.forward.c[k].to_f64() - e).abs() < 1e-15, "k={k}");
    }
    assert!((s.inverse.c[1].to_f64() - 0.5).abs() < 1e-15);
    assert!((s.inverse.c[3].to_f64() - 1.0 / 48.0).abs() < 1e-15);
    let first = XReal::pi(p()) * &eq.phi_v0;
    assert!((&s.forward.c[1] - &first).abs().to_f64() < 1e-55);
}

#[test]
fn phi0_reversion_composes_to_identity() {
    let v = PotentialSpec::from_f64(&[0.0, 0.3, 0.5, -0.1, 0.25], p()).unwrap();
    let eq = solve_equilibrium(&v, p()).unwrap();
    let s = eq.phi0_taylor(9);
    for x in [0.01, -0.02, 0.03] {
        let xr = XReal::from_f64(x, p());
        let back = s.inverse.eval(&s.forward.eval(&xr));
        assert!((back - &xr).abs().to_f64() < 30.0 * x.abs().powi(10), "x={x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn even_potentials_are_symmetric(c2 in 0.2f64..3.0, c4 in 0.0f64..2.0) {
        let pr = Precision::digits(50);
        let v = PotentialSpec::from_f64(&[0.0, 0.0, c2, 0.0, c4], pr).unwrap();
        let eq = solve_equilibrium(&v, pr).unwrap();
        prop_assert!((&eq.a + &eq.b).abs().to_f64() < 1e-45);
        let half_pi = XReal::pi(pr) * 0.5;
        prop_assert!((&eq.kappa - &half_pi).abs().to_f64() < 1e-40);
        prop_assert!((eq.total_mass() - 1.0).abs().to_f64() < 1e-40);
        let s = eq.phi0_taylor(6);
        for k in (0..=6).step_by(2) {
            prop_assert!(s.forward.c[k].abs().to_f64() < 1e-45);
        }
    }

    #[test]
    fn residual_nonnegative_and_vanishing_on_support(c1 in -0.4f64..0.4, c3 in -0.2f64..0.2) {
        let pr = Precision::digits(50);
        let v = PotentialSpec::from_f64(&[0.0, c1, 1.0, c3, 0.3], pr).unwrap();
        let eq = match solve_equilibrium(&v, pr) {
            Ok(e) => e,
            Err(_) => return Ok(()),
        };
        let (a, b) = (eq.a.to_f64(), eq.b.to_f64());
        for k in 0..=60 {
            let x = a - 2.0 + (b - a + 4.0) * k as f64 / 60.0;
            let r = eq.el_residual(&XReal::from_f64(x, pr)).to_f64();
            if x > a + 1e-9 && x < b - 1e-9 {
                prop_assert!(r.abs() < 1e-35, "x={} r={}", x, r);
            } else if x < a - 1e-9 || x > b + 1e-9 {
                prop_assert!(r > 0.0, "x={} r={}", x, r);
            }
        }
        let split = &eq.kappa + &eq.kappa_left();
        prop_assert!((split - XReal::pi(pr)).abs().to_f64() < 1e-40);
    }
}
