//! Least-squares fits of the oscillatory 1/n structure.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("value at n = {0} is not finite")]
    NonFinite(usize),
    #[error("every basis column vanishes")]
    Degenerate,
}

pub const MIN_POINTS: usize = 8;

/// Frequency handling: fixed κ, or scanned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kappa {
    Fixed(f64),
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub amplitude_cos: f64,
    pub amplitude_sin: f64,
    pub drift: f64,
    /// 2κ
    pub fitted_frequency: f64,
    pub residual_rms: f64,
    pub window: (usize, usize),
    /// basis columns dropped as numerically zero
    pub degenerate: Vec<String>,
}

const NAMES: [&str; 3] = ["cos", "sin", "drift"];

/// Solves for value_n ≈ A cos(ωn) + B sin(ωn) + C/n, dropping vanishing columns.
fn solve_fixed(series: &[(usize, f64)], omega: f64) -> Result<(f64, f64, f64, f64, Vec<String>), FitError> {
    let m = series.len();
    let cols: [Box<dyn Fn(f64) -> f64>; 3] =
        [Box::new(move |n| (omega * n).cos()), Box::new(move |n| (omega * n).sin()), Box::new(|n| 1.0 / n)];
    let mut keep = Vec::new();
    let mut degenerate = Vec::new();
    let col_norms: Vec<f64> = cols
        .iter()
        .map(|c| series.iter().map(|&(n, _)| c(n as f64).powi(2)).sum::<f64>().sqrt())
        .collect();
    let scale = col_norms.iter().cloned().fold(0.0, f64::max);
    for (j, &nrm) in col_norms.iter().enumerate() {
        if nrm > 1e-9 * scale.max(1e-300) {
            keep.push(j);
        } else {
            degenerate.push(NAMES[j].to_string());
        }
    }
    if keep.is_empty() {
        return Err(FitError::Degenerate);
    }
    let a = DMatrix::from_fn(m, keep.len(), |i, j| cols[keep[j]](series[i].0 as f64));
    let b = DVector::from_iterator(m, series.iter().map(|&(_, v)| v));
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12 * svd.singular_values.max()).map_err(|_| FitError::Degenerate)?;
    let r = &a * &x - &b;
    let rms = (r.norm_squared() / m as f64).sqrt();
    let mut coef = [0.0; 3];
    for (k, &j) in keep.iter().enumerate() {
        coef[j] = x[k];
    }
    Ok((coef[0], coef[1], coef[2], rms, degenerate))
}

/// Fits A cos(2nκ) + B sin(2nκ) + C/n to (n, value) pairs.
///
/// With `Kappa::Free` the frequency 2κ ∈ (0, π] is found by a grid scan of the
/// residual followed by golden-section refinement.
pub fn fit_oscillation(series: &[(usize, f64)], kappa: Kappa) -> Result<FitResult, FitError> {
    if series.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints { need: MIN_POINTS, got: series.len() });
    }
    if let Some(&(n, _)) = series.iter().find(|(_, v)| !v.is_finite()) {
        return Err(FitError::NonFinite(n));
    }
    let omega = match kappa {
        Kappa::Fixed(k) => 2.0 * k,
        Kappa::Free => scan_frequency(series)?,
    };
    let (a, b, c, rms, degenerate) = solve_fixed(series, omega)?;
    let lo = series.iter().map(|p| p.0).min().unwrap();
    let hi = series.iter().map(|p| p.0).max().unwrap();
    Ok(FitResult {
        amplitude_cos: a,
        amplitude_sin: b,
        drift: c,
        fitted_frequency: omega,
        residual_rms: rms,
        window: (lo, hi),
        degenerate,
    })
}

fn scan_frequency(series: &[(usize, f64)]) -> Result<f64, FitError> {
    let res = |w: f64| solve_fixed(series, w).map(|r| r.3).unwrap_or(f64::INFINITY);
    let pi = std::f64::consts::PI;
    let grid = 4000;
    let h = pi / grid as f64;
    let mut best = (f64::INFINITY, h);
    for i in 1..=grid {
        let w = i as f64 * h;
        let r = res(w);
        if r < best.0 {
            best = (r, w);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(1e-9), (best.1 + h).min(pi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (res(c), res(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = res(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = res(d);
        }
    }
    let w = 0.5 * (a + b);
    if res(w).is_finite() {
        Ok(w)
    } else {
        Err(FitError::Degenerate)
    }
}
