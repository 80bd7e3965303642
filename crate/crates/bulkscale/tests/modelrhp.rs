use bulkscale::modelrhp::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn solve(s: f64, t: f64) -> ModelSolution {
    solve_model(&ContourMesh::for_params(s, 1.0 / (t * t), 1e-16), s, t).unwrap()
}

#[test]
fn sine_parametrix_identities() {
    let z = C64::new(0.4, 1.3);
    let p = sine_parametrix(z).unwrap();
    // S₁⁺: (I + e^{2iζ}E₂₁)e^{−iζσ₃}
    let e = (C64::new(0.0, 2.0) * z).exp();
    let expect = [[(-C64::i() * z).exp(), C64::new(0.0, 0.0)], [e * (-C64::i() * z).exp(), (C64::i() * z).exp()]];
    assert!(mat_norm(&mat_sub(&p, &expect)) < 1e-14);
    for z in [C64::new(1.0, 0.1), C64::new(-2.0, -0.1), C64::new(0.3, -2.0)] {
        assert!((mat_det(&sine_parametrix(z).unwrap()) - 1.0).norm() < 1e-13);
    }
    // sine-kernel combination at u − v = π/2
    let (u, v) = (C64::new(PI / 2.0 + 0.3, 1e-12), C64::new(0.3, 1e-12));
    let pv = mat_inv(&sine_parametrix(v).unwrap());
    let pu = sine_parametrix(u).unwrap();
    let left = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]];
    let right = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(1.0, 0.0), C64::new(1.0, 0.0)]];
    let m = mat_mul(&mat_mul(&left, &mat_mul(&pv, &pu)), &right);
    let val = m[1][0] / (C64::new(0.0, 2.0) * (u - v));
    assert!((val - 2.0 / PI).norm() < 1e-10);
}

#[test]
fn jump_cyclic_product_at_origin() {
    let (s, u) = (1.0, 0.25);
    let j = |r: Ray| jump_ls(r, 1e-9, s, u);
    let prod = [j(Ray::R0), j(Ray::R1), mat_inv(&j(Ray::R2)), mat_inv(&j(Ray::R3)), mat_inv(&j(Ray::Rm2)), j(Ray::Rm1)]
        .iter()
        .fold(mat_id(), |acc, m| mat_mul(&acc, m));
    assert!(mat_norm(&mat_sub(&prod, &mat_id())) < 1e-7);
}

#[test]
fn jump_bound_and_trivial_limit() {
    for s in [0.0, 1.0, 3.0] {
        for ray in Ray::ALL {
            for r in [0.0, 0.5, 2.0, 5.0] {
                let z = ray.point(r);
                let bound = (-s - 0.25 * z * z).exp().norm();
                let dev = mat_norm(&mat_sub(&jump_ls(ray, r, s, 0.25), &mat_id()));
                assert!(dev <= 4.0 * bound + 1e-15, "s={s} {ray:?} r={r}: {dev} vs {bound}");
            }
        }
    }
    assert_eq!(jump_ls(Ray::R1, 1.0, f64::INFINITY, 0.25), mat_id());
}

#[test]
fn infinite_s_is_sine_solution() {
    let sol = solve(f64::INFINITY, 2.0);
    assert_eq!(sol.phi1, [[C64::new(0.0, 0.0); 2]; 2]);
    let z = C64::new(0.3, 0.8);
    assert!(mat_norm(&mat_sub(&sol.phi_inf(z).unwrap(), &sine_parametrix(z).unwrap())) < 1e-15);
    let k = k_infinity(&sol, 0.6, -0.9);
    assert!((k.value - (1.5f64).sin() / (PI * 1.5)).abs() < 1e-14);
    assert!((k_infinity(&sol, 0.0, 0.0).value - 1.0 / PI).abs() < 1e-9);
    assert_eq!(q_via_integral(&sol).unwrap(), 0.0);
}

#[test]
fn solution_health_at_two_two() {
    let mesh = ContourMesh::for_params(2.0, 0.25, 1e-16);
    let sol = solve_model(&mesh, 2.0, 2.0).unwrap();
    for k in 0..20 {
        let z = C64::from_polar(0.4 + 0.25 * k as f64, 0.31 * k as f64 + 0.05);
        let d = mat_det(&sol.phi_inf(z).unwrap());
        assert!((d - 1.0).norm() < 1e-8, "z={z}");
    }
    assert!(sol.jump_residual().0 < 10.0 * 1e-16f64.max(1e-14));
    let fine = solve_model(&mesh.refined(), 2.0, 2.0).unwrap();
    assert!(mat_norm(&mat_sub(&sol.phi1, &fine.phi1)) < 1e-8);
    let neu = solve_model_with(&mesh, 2.0, 2.0, SolverKind::Neumann).unwrap();
    assert!(mat_norm(&mat_sub(&sol.phi1, &neu.phi1)) < 1e-10);
    let pq = extract_pq(&sol);
    assert!(pq.real_ok, "{pq:?}");
    assert!((q_via_integral(&sol).unwrap() - pq.q_osc).abs() < 1e-6 * pq.q_osc.abs().max(1e-3));
}

#[test]
fn ls_close_to_identity_for_large_s() {
    let sol = solve(5.0, 2.0);
    let mut worst = 0.0f64;
    for k in 0..24 {
        let z = C64::from_polar(0.3 + 0.4 * k as f64, 0.27 * k as f64 + 0.05);
        worst = worst.max(mat_norm(&mat_sub(&sol.l_s(z).unwrap(), &mat_id())));
    }
    assert!(worst < 10.0 * (-5.0f64).exp(), "{worst}");
    assert!(sol.deviation() < 10.0 * (-5.0f64).exp());
}

#[test]
fn large_s_matches_perturbative_q() {
    let mut last = f64::INFINITY;
    for s in [3.0, 4.0, 5.0, 6.0] {
        let sol = solve(s, 2.0);
        let pq = extract_pq(&sol);
        let err = (pq.q_osc - perturbative_q(s, 2.0)).abs();
        assert!(err < 5.0 * (-2.0 * s).exp(), "s={s}: {err}");
        assert!(err < last);
        last = err;
        assert!(pq.p.abs() < 2.0 * (-s).exp() && pq.q.abs() < (-s).exp());
    }
}

#[test]
fn kernel_routes_agree() {
    let sol = solve(2.0, 2.0);
    for &z in &[-2.0, -1.0, 0.0, 1.0, 2.0] {
        for &x in &[-2.0, -1.0, 0.5, 1.5, 2.0] {
            let k = k_infinity(&sol, z, x);
            assert!(k.route_gap < 1e-8 && k.imag < 1e-8, "{z} {x}: {k:?}");
            let kt = k_infinity(&sol, x, z);
            assert!((k.value - kt.value).abs() < 1e-10);
        }
    }
}

#[test]
fn ode_residual_is_second_order() {
    let r1 = ode_residual(2.0, 2.0, 0.1, 0).unwrap();
    let r2 = ode_residual(2.0, 2.0, 0.05, 0).unwrap();
    let ratio = r1 / r2;
    assert!((3.0..5.0).contains(&ratio), "{r1} {r2}");
    // for Φ = e^{iTξ} only the difference quotient error ξ³δ²/6 remains
    let sine = ode_residual(f64::INFINITY, 2.0, 0.1, 0).unwrap();
    assert!(sine <= 8.0 * 0.01 / 6.0 * 1.001, "{sine}");
}

#[test]
fn pde_perturbative_oracle_and_sign_symmetry() {
    // Q = −e^{−s−T²}/(2√π) satisfies the PDE up to the −2Q² term
    let (s, t, d) = (8.0, 2.0, 0.01);
    let mut grid = [[0.0; 5]; 3];
    let mut neg = grid;
    for i in 0..3 {
        for j in 0..5 {
            grid[i][j] = perturbative_q(s + (i as f64 - 1.0) * d, t + (j as f64 - 2.0) * d);
            neg[i][j] = -grid[i][j];
        }
    }
    assert!(pde_residual_from_grid(&grid, d, d).unwrap() < 1e-3);
    // both sides are even in Q, so flipping the sign leaves the residual unchanged
    let mut g2 = [[0.0; 5]; 3];
    for i in 0..3 {
        for j in 0..5 {
            g2[i][j] = solve(1.0 + (i as f64 - 1.0) * 0.05, 2.0 + (j as f64 - 2.0) * 0.05).q_osc;
        }
    }
    let mut n2 = g2;
    n2.iter_mut().flatten().for_each(|q| *q = -*q);
    let a = pde_residual_from_grid(&g2, 0.05, 0.05).unwrap();
    let b = pde_residual_from_grid(&n2, 0.05, 0.05).unwrap();
    assert!((a - b).abs() <= 1e-12 * a, "{a} {b}");
    assert!(a < 0.1);
    assert!(pde_residual_from_grid(&[[0.0; 5]; 3], 0.1, 0.1).is_err());
}

#[test]
fn finite_n_quadratic_profile_is_the_limit() {
    let mesh = ContourMesh::for_params(2.0, 0.25, 1e-16);
    let lim = solve_model(&mesh, 2.0, 2.0).unwrap();
    let fin = solve_model_finite_n(&mesh, 2.0, &[0.0, 0.0, 0.25], 10.0, 8.0).unwrap();
    assert!(finite_n_distance(&fin, &lim) < 1e-14);
    assert!(solve_model_finite_n(&mesh, 2.0, &[0.0, 0.0, 0.25], 0.5, 8.0).is_err());
}

#[test]
fn finite_n_converges_to_limit() {
    // H₀(w) = w²/4 + w⁴/16 (even, so Q stays real)
    let coeffs = [0.0, 0.0, 0.25, 0.0, 1.0 / 16.0];
    let mesh = ContourMesh::for_params(2.0, 0.25, 1e-16);
    let lim = solve_model(&mesh, 2.0, 2.0).unwrap();
    let mut last = f64::INFINITY;
    for n in [8.0, 16.0, 32.0, 64.0] {
        let fin = solve_model_finite_n(&mesh, 2.0, &coeffs, 10.0, n).unwrap();
        let d = finite_n_distance(&fin, &lim);
        assert!(d < last, "n={n}: {d}");
        last = d;
    }
    assert!(last < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn kernel_symmetric_and_det_one(s in 0.0f64..4.0, t in 1.0f64..3.0, z in -2.0f64..2.0, x in -2.0f64..2.0) {
        let sol = solve(s, t);
        let a = k_infinity(&sol, z, x).value;
        let b = k_infinity(&sol, x, z).value;
        prop_assert!((a - b).abs() < 1e-9);
        let w = C64::new(z, 0.7);
        prop_assert!((mat_det(&sol.phi_inf(w).unwrap()) - 1.0).norm() < 1e-8);
        let pq = extract_pq(&sol);
        prop_assert!(pq.antisymmetry < 1e-8);
    }
}
