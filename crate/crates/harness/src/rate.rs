//! Convergence-rate estimates by linear regression.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("error entry {index} is {value}, must be positive and finite")]
    NonPositive { index: usize, value: f64 },
    #[error("need at least two distinct abscissae")]
    TooFew,
    #[error("length mismatch: {0} abscissae, {1} errors")]
    Length(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// standard error of the slope (0 with two points)
    pub stderr: f64,
    /// slope ± 2·stderr
    pub interval: (f64, f64),
}

fn regress(x: &[f64], y: &[f64]) -> Result<RateEstimate, RateError> {
    let n = x.len();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if n < 2 || sxx <= 0.0 {
        return Err(RateError::TooFew);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateEstimate { slope, intercept, stderr, interval: (slope - 2.0 * stderr, slope + 2.0 * stderr) })
}

fn check(xs: usize, errors: &[f64]) -> Result<(), RateError> {
    if xs != errors.len() {
        return Err(RateError::Length(xs, errors.len()));
    }
    if let Some((index, &value)) = errors.iter().enumerate().find(|(_, e)| !(e.is_finite() && **e > 0.0)) {
        return Err(RateError::NonPositive { index, value });
    }
    Ok(())
}

/// Slope of log(error) against log(n).
pub fn rate_estimate(ns: &[f64], errors: &[f64]) -> Result<RateEstimate, RateError> {
    check(ns.len(), errors)?;
    if ns.iter().any(|n| !(*n > 0.0)) {
        return Err(RateError::TooFew);
    }
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    regress(&lx, &ly)
}

/// Slope of log(error) against a linear abscissa, for exponential decay.
pub fn decay_rate(xs: &[f64], errors: &[f64]) -> Result<RateEstimate, RateError> {
    check(xs.len(), errors)?;
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    regress(xs, &ly)
}
