//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated glue
//! beyond `wasm-bindgen --target web`.

use bulkscale::equilibrium::{solve_equilibrium, PotentialSpec};
use bulkscale::modelrhp::{extract_pq, k_infinity, solve_model, ContourMesh};
use bulkscale::numerics::Precision;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DIGITS: u32 = 30;

#[derive(Serialize)]
struct Density {
    a: f64,
    b: f64,
    kappa: f64,
    phi_v0: f64,
    points: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct KernelCurve {
    q: f64,
    p: f64,
    /// (ξ, K_∞(0, ξ), sin ξ/(πξ))
    points: Vec<(f64, f64, f64)>,
}

#[derive(Serialize)]
struct QCurve {
    big_t: f64,
    /// (s, p, q)
    points: Vec<(f64, f64, f64)>,
}

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

/// Equilibrium density for V(x) = Σ c_k x^k, sampled at `m + 1` points.
pub fn density_impl(coeffs: &[f64], m: usize) -> Result<String, String> {
    let p = Precision::digits(DIGITS);
    let v = PotentialSpec::from_f64(coeffs, p).map_err(|e| e.to_string())?;
    let eq = solve_equilibrium(&v, p).map_err(|e| e.to_string())?;
    let m = m.clamp(2, 2000);
    let points = (0..=m)
        .map(|i| {
            let x = &eq.a + &((&eq.b - &eq.a) * (i as f64 / m as f64));
            (x.to_f64(), eq.density(&x).to_f64())
        })
        .collect();
    Ok(json(Ok(Density { a: eq.a.to_f64(), b: eq.b.to_f64(), kappa: eq.kappa.to_f64(), phi_v0: eq.phi_v0.to_f64(), points })))
}

fn model(s: f64, big_t: f64) -> Result<bulkscale::modelrhp::ModelSolution, String> {
    if !(big_t > 0.0) {
        return Err("T must be positive".into());
    }
    let mesh = ContourMesh::for_params(s, 1.0 / (big_t * big_t), 1e-12);
    solve_model(&mesh, s, big_t).map_err(|e| e.to_string())
}

/// K_∞(0, ξ) for ξ ∈ [−xmax, xmax] against the sine kernel.
pub fn kernel_impl(s: f64, big_t: f64, xmax: f64, m: usize) -> Result<String, String> {
    let sol = model(s, big_t)?;
    let pq = extract_pq(&sol);
    let m = m.clamp(2, 400);
    let points = (0..=m)
        .map(|i| {
            let xi = -xmax + 2.0 * xmax * i as f64 / m as f64;
            let sine = if xi.abs() < 1e-12 { 1.0 } else { xi.sin() / xi } / std::f64::consts::PI;
            (xi, k_infinity(&sol, 0.0, xi).value, sine)
        })
        .collect();
    Ok(json(Ok(KernelCurve { q: pq.q, p: pq.p, points })))
}

/// p(s, T) and Q(s, T) over an s grid.
pub fn q_curve_impl(big_t: f64, s_lo: f64, s_hi: f64, m: usize) -> Result<String, String> {
    let m = m.clamp(1, 60);
    let mut points = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let s = s_lo + (s_hi - s_lo) * i as f64 / m as f64;
        let pq = extract_pq(&model(s, big_t)?);
        points.push((s, pq.p, pq.q));
    }
    Ok(json(Ok(QCurve { big_t, points })))
}

#[wasm_bindgen]
pub fn density(coeffs: Vec<f64>, m: usize) -> String {
    density_impl(&coeffs, m).unwrap_or_else(|e| json::<()>(Err(e)))
}

#[wasm_bindgen]
pub fn kernel(s: f64, big_t: f64, xmax: f64, m: usize) -> String {
    kernel_impl(s, big_t, xmax, m).unwrap_or_else(|e| json::<()>(Err(e)))
}

#[wasm_bindgen]
pub fn q_curve(big_t: f64, s_lo: f64, s_hi: f64, m: usize) -> String {
    q_curve_impl(big_t, s_lo, s_hi, m).unwrap_or_else(|e| json::<()>(Err(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_density_is_semicircle() {
        let out: serde_json::Value = serde_json::from_str(&density(vec![0.0, 0.0, 2.0], 8)).unwrap();
        assert!((out["a"].as_f64().unwrap() + 1.0).abs() < 1e-12);
        assert!((out["phi_v0"].as_f64().unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn kernel_tends_to_sine_for_large_s() {
        let out: serde_json::Value = serde_json::from_str(&kernel(8.0, 2.0, 2.0, 8)).unwrap();
        for pt in out["points"].as_array().unwrap() {
            assert!((pt[1].as_f64().unwrap() - pt[2].as_f64().unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn default_page_range_solves() {
        let out: serde_json::Value = serde_json::from_str(&q_curve(2.0, -1.0, 6.0, 7)).unwrap();
        let pts = out["points"].as_array().unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts.iter().all(|p| p[2].as_f64().unwrap().is_finite()));
    }

    #[test]
    fn bad_input_reports_error() {
        let out: serde_json::Value = serde_json::from_str(&q_curve(-1.0, 0.0, 1.0, 2)).unwrap();
        assert!(out["error"].is_string());
    }
}
