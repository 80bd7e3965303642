//! Gauss–Legendre rules and composite quadrature.

use super::xreal::{Precision, XReal};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("Newton iteration for Legendre root {index} of {m} did not converge in {iters} steps")]
    NewtonStalled { m: usize, index: usize, iters: usize },
    #[error("integrand not finite at node x = {node} (panel {panel})")]
    NonFinite { node: String, panel: usize },
    #[error("invalid rule size m = 0")]
    EmptyRule,
}

/// Nodes and positive weights of an m-point Gauss rule on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<XReal>,
    pub weights: Vec<XReal>,
    pub interval: (XReal, XReal),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine image on `[lo, hi]`.
    pub fn mapped(&self, lo: &XReal, hi: &XReal) -> QuadratureRule {
        let half = (hi - lo) * 0.5;
        let mid = (hi + lo) * 0.5;
        let (a, b) = (&self.interval.0, &self.interval.1);
        let scale = &half * 2.0 / (b - a);
        let shift = (a + b) * 0.5;
        QuadratureRule {
            nodes: self.nodes.iter().map(|x| &mid + &(&(x - &shift) * &scale)).collect(),
            weights: self.weights.iter().map(|w| w * &scale).collect(),
            interval: (lo.clone(), hi.clone()),
        }
    }

    pub fn integrate(&self, f: impl Fn(&XReal) -> XReal) -> XReal {
        let p = self.nodes[0].precision();
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(XReal::zero(p), |acc, (x, w)| acc + w * &f(x))
    }
}

const MAX_NEWTON: usize = 100;

fn legendre_pair(m: usize, x: &XReal) -> (XReal, XReal) {
    // returns (P_m(x), P_m'(x))
    let mut p0 = x.lift(1.0);
    let mut p1 = x.clone();
    for k in 1..m {
        let kk = k as f64;
        let p2 = (&(x * &p1) * (2.0 * kk + 1.0) - &(&p0 * kk)) / (kk + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = (&(x * &p1) - &p0) * (m as f64) / &(x.sqr() - 1.0);
    (p1, d)
}

fn legendre_pair_f64(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..m {
        let kk = k as f64;
        let p2 = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, m as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn build_rule(m: usize, p: Precision) -> Result<QuadratureRule, QuadError> {
    if m == 0 {
        return Err(QuadError::EmptyRule);
    }
    let half = m / 2;
    let mut pos_nodes = Vec::with_capacity(half);
    let mut pos_weights = Vec::with_capacity(half);
    let tol = p.eps_with_slack(2);
    for i in 1..=half {
        let mut xf = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
        for _ in 0..8 {
            let (pm, dp) = legendre_pair_f64(m, xf);
            xf -= pm / dp;
        }
        let mut x = XReal::from_f64(xf, p);
        let mut iters = 0;
        loop {
            let (pm, dp) = legendre_pair(m, &x);
            let step = &pm / &dp;
            x -= &step;
            iters += 1;
            if step.abs().to_f64() <= tol {
                break;
            }
            if iters >= MAX_NEWTON {
                return Err(QuadError::NewtonStalled { m, index: i, iters });
            }
        }
        let (_, dp) = legendre_pair(m, &x);
        let w = x.lift(2.0) / &((x.lift(1.0) - x.sqr()) * dp.sqr());
        pos_nodes.push(x);
        pos_weights.push(w);
    }
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (x, w) in pos_nodes.iter().zip(&pos_weights) {
        nodes.push(-x);
        weights.push(w.clone());
    }
    if m % 2 == 1 {
        let z = XReal::zero(p);
        let (_, dp) = legendre_pair(m, &z);
        weights.push(XReal::from_f64(2.0, p) / dp.sqr());
        nodes.push(z);
    }
    for (x, w) in pos_nodes.iter().zip(&pos_weights).rev() {
        nodes.push(x.clone());
        weights.push(w.clone());
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (XReal::from_f64(-1.0, p), XReal::from_f64(1.0, p)),
    })
}

type RuleCache = Mutex<HashMap<(usize, u32), Arc<QuadratureRule>>>;

fn cache() -> &'static RuleCache {
    static C: OnceLock<RuleCache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// m-point Gauss–Legendre rule on [−1, 1]. Results are memoised per (m, D).
pub fn legendre_rule(m: usize, p: Precision) -> Result<Arc<QuadratureRule>, QuadError> {
    let key = (m, p.get());
    if let Some(r) = cache().lock().expect("rule cache").get(&key) {
        return Ok(r.clone());
    }
    let r = Arc::new(build_rule(m, p)?);
    cache().lock().expect("rule cache").insert(key, r.clone());
    Ok(r)
}

/// Sum of mapped m-point rules over `panels`.
pub fn composite_quad(
    f: impl Fn(&XReal) -> XReal,
    panels: &[(XReal, XReal)],
    m: usize,
    p: Precision,
) -> Result<XReal, QuadError> {
    let rule = legendre_rule(m, p)?;
    let mut acc = XReal::zero(p);
    for (k, (lo, hi)) in panels.iter().enumerate() {
        let r = rule.mapped(&lo.with_precision(p), &hi.with_precision(p));
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(QuadError::NonFinite { node: x.to_sci(20), panel: k });
            }
            acc += &(w * &v);
        }
    }
    Ok(acc)
}

/// All nodes and weights of the composite rule, in panel order.
pub fn composite_nodes(
    panels: &[(XReal, XReal)],
    m: usize,
    p: Precision,
) -> Result<(Vec<XReal>, Vec<XReal>), QuadError> {
    let rule = legendre_rule(m, p)?;
    let mut xs = Vec::with_capacity(panels.len() * m);
    let mut ws = Vec::with_capacity(panels.len() * m);
    for (lo, hi) in panels {
        let r = rule.mapped(&lo.with_precision(p), &hi.with_precision(p));
        xs.extend(r.nodes);
        ws.extend(r.weights);
    }
    Ok((xs, ws))
}

/// Splits `[lo, hi]` into `k` equal panels.
pub fn uniform_panels(lo: &XReal, hi: &XReal, k: usize) -> Vec<(XReal, XReal)> {
    let k = k.max(1);
    let h = (hi - lo) / (k as f64);
    (0..k)
        .map(|i| {
            let a = lo + &(&h * (i as f64));
            let b = if i + 1 == k { hi.clone() } else { lo + &(&h * ((i + 1) as f64)) };
            (a, b)
        })
        .collect()
}

/// Panels on `[lo, hi]` whose widths grow geometrically (ratio `r`) away from `lo`,
/// starting at `w0` and capped at `wmax`.
pub fn graded_panels(lo: f64, hi: f64, w0: f64, r: f64, wmax: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = lo;
    let mut w = w0.min(wmax);
    while a < hi {
        let mut b = a + w;
        if b > hi || hi - b < 0.25 * w {
            b = hi;
        }
        out.push((a, b));
        a = b;
        w = (w * r).min(wmax);
    }
    out
}

/// Mirror image of `graded_panels`: fine at `hi`, coarse towards `lo`.
pub fn graded_panels_rev(lo: f64, hi: f64, w0: f64, r: f64, wmax: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = graded_panels(-hi, -lo, w0, r, wmax)
        .into_iter()
        .map(|(a, b)| (-b, -a))
        .collect();
    v.reverse();
    v
}

pub fn to_xpanels(v: &[(f64, f64)], p: Precision) -> Vec<(XReal, XReal)> {
    v.iter()
        .map(|&(a, b)| (XReal::from_f64(a, p), XReal::from_f64(b, p)))
        .collect()
}
