//! Recurrence coefficients and Christoffel–Darboux kernels for the deformed
//! weight ω_n(x) = σ_n(x)·e^{−nV(x)}, σ_n(x) = 1/(1 + e^{−s−n²Q(x)}).
//!
//! The inner product is discretised on composite Gauss–Legendre panels and the
//! multiplication operator is tridiagonalised by Lanczos with full
//! reorthogonalisation.

use crate::equilibrium::{solve_equilibrium, EqError, EquilibriumData, PotentialSpec};
use crate::numerics::{composite_nodes, Poly, Precision, QuadError, XReal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("invalid deformation: {0}")]
    InvalidDeformation(String),
    #[error("n must be at least 1")]
    ZeroN,
    #[error("K = {k} exceeds the discretisation ({nodes} nodes); need at least {required_panels} panels")]
    KTooLarge { k: usize, nodes: usize, required_panels: usize },
    #[error("loss of positivity at γ²_{k} = {value:e}; increase the precision")]
    PrecisionFailure { k: usize, value: f64 },
    #[error("kernel needs K ≥ n (K = {k}, n = {n})")]
    TableTooShort { k: usize, n: usize },
    #[error(transparent)]
    Equilibrium(#[from] EqError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Deformation profile Q with its Fermi parameter s; t = Q″(0)/2.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationSpec {
    pub q_def: Poly,
    pub s: XReal,
    pub t: XReal,
}

impl DeformationSpec {
    pub fn new(q_def: Poly, s: XReal) -> Result<Self, OpError> {
        if !q_def.coeff(0).is_zero() || !q_def.coeff(1).is_zero() {
            return Err(OpError::InvalidDeformation("Q(0) and Q'(0) must vanish".into()));
        }
        let t = q_def.coeff(2);
        if !t.is_positive() {
            return Err(OpError::InvalidDeformation("t = Q''(0)/2 must be positive".into()));
        }
        if s.is_nan() || s.is_inf_neg() {
            return Err(OpError::InvalidDeformation("s must be real or +inf".into()));
        }
        Ok(DeformationSpec { q_def, s, t })
    }

    pub fn eval(&self, x: &XReal) -> XReal {
        self.q_def.eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Deformation {
    /// σ ≡ 1, i.e. s = +∞
    Ground,
    Fermi(DeformationSpec),
}

impl Deformation {
    /// s as f64 (+∞ for the ground process).
    pub fn s_f64(&self) -> f64 {
        match self {
            Deformation::Ground => f64::INFINITY,
            Deformation::Fermi(d) => d.s.to_f64(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub potential: PotentialSpec,
    pub deformation: Deformation,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(potential: PotentialSpec, deformation: Deformation, n: usize) -> Result<Self, OpError> {
        if n == 0 {
            return Err(OpError::ZeroN);
        }
        let deformation = match deformation {
            Deformation::Fermi(d) if d.s.is_inf_pos() => Deformation::Ground,
            d => d,
        };
        Ok(EnsembleSpec { potential, deformation, n })
    }

    pub fn with_n(&self, n: usize) -> Self {
        EnsembleSpec { n, ..self.clone() }
    }

    pub fn is_even(&self) -> bool {
        self.potential.poly.is_even()
            && match &self.deformation {
                Deformation::Ground => true,
                Deformation::Fermi(d) => d.q_def.is_even(),
            }
    }
}

/// log σ_n(x) in overflow-safe form.
pub fn log_sigma(spec: &EnsembleSpec, x: &XReal) -> XReal {
    match &spec.deformation {
        Deformation::Ground => XReal::zero(x.precision()),
        Deformation::Fermi(d) => {
            let n2 = (spec.n * spec.n) as f64;
            let z = &d.s.with_precision(x.precision()) + &(d.eval(x) * n2);
            if z.is_negative() {
                &z - &z.exp().ln_1p()
            } else {
                -((-&z).exp().ln_1p())
            }
        }
    }
}

/// log ω_n(x) = log σ_n(x) − nV(x).
pub fn log_weight(spec: &EnsembleSpec, x: &XReal) -> XReal {
    log_sigma(spec, x) - spec.potential.eval(x) * (spec.n as f64)
}

/// Composite rule carrying the weight: Σ w_i f(x_i) ≈ ∫ f ω_n.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub nodes: Vec<XReal>,
    /// Gauss weight times ω_n(x_i)
    pub weights: Vec<XReal>,
    pub window: (f64, f64),
    pub panels: Vec<(f64, f64)>,
    pub points_per_panel: usize,
}

/// Tuning of the panel layout.
#[derive(Clone, Copy, Debug)]
pub struct DiscretizationParams {
    /// Gauss points per panel; `None` picks max(40, ⌈2D/3⌉).
    pub m: Option<usize>,
    /// bulk panel width = factor / (K·max φ)
    pub bulk_factor: f64,
}

impl Default for DiscretizationParams {
    fn default() -> Self {
        DiscretizationParams { m: None, bulk_factor: 2.0 }
    }
}

fn threshold(p: Precision) -> f64 {
    (p.get() as f64 + 10.0) * std::f64::consts::LN_10
}

/// Support of the degree-K problem: equilibrium data of (n/K)·V.
fn scaled_equilibrium(spec: &EnsembleSpec, k: usize) -> Result<(EquilibriumData, f64), OpError> {
    let p = Precision::digits(50);
    let deg = k.max(spec.n) as f64;
    let lam = XReal::from_f64(spec.n as f64 / deg, p);
    let w = PotentialSpec { poly: spec.potential.poly.with_precision(p) }.scaled(&lam);
    Ok((solve_equilibrium(&w, p)?, deg))
}

fn window_edge(eq: &EquilibriumData, deg: f64, level: f64, right: bool) -> f64 {
    let p = eq.precision;
    let edge = if right { eq.b.to_f64() } else { eq.a.to_f64() };
    let dir = if right { 1.0 } else { -1.0 };
    let f = |x: f64| deg * eq.el_residual(&XReal::from_f64(x, p)).to_f64() - level;
    let step = 0.05 * eq.r.to_f64();
    let mut lo = edge;
    let mut hi = edge + dir * step;
    while f(hi) < 0.0 {
        lo = hi;
        hi += dir * step;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Quadrature window where the degree-K integrands exceed e^{−(D+10) ln 10} relative to the bulk.
pub fn quadrature_window(spec: &EnsembleSpec, k: usize, p: Precision) -> Result<(f64, f64), OpError> {
    let (eq, deg) = scaled_equilibrium(spec, k)?;
    let level = threshold(p);
    let hi = window_edge(&eq, deg, level, true);
    let lo = if spec.is_even() { -hi } else { window_edge(&eq, deg, level, false) };
    Ok((lo, hi))
}

struct Layout {
    bulk: (f64, f64),
    h: f64,
    origin: Option<(f64, f64)>,
}

impl Layout {
    fn width(&self, x: f64) -> f64 {
        let (a, b) = self.bulk;
        let dist = if x < a { a - x } else if x > b { x - b } else { 0.0 };
        let mut w = (self.h + 0.25 * dist).min(4.0 * self.h);
        if let Some((w0, xp)) = self.origin {
            w = w.min(w0.max(0.3 * (x.abs() - 1.5 * xp)));
        }
        w
    }

    fn march(&self, to: f64) -> Vec<(f64, f64)> {
        // from 0 towards `to`
        let dir = to.signum();
        let len = to.abs();
        let mut out = Vec::new();
        let mut x = 0.0f64;
        while x < len {
            let mut w = self.width(dir * x);
            w = w.min(self.width(dir * (x + w)));
            let mut nx = x + w;
            if nx > len || len - nx < 0.3 * w {
                nx = len;
            }
            out.push((x, nx));
            x = nx;
        }
        out.into_iter().map(|(u, v)| (dir * u, dir * v)).collect()
    }
}

/// Builds the weighted composite rule for degrees up to K.
pub fn discretize(
    spec: &EnsembleSpec,
    k: usize,
    p: Precision,
    params: DiscretizationParams,
) -> Result<Discretization, OpError> {
    let (eq, deg) = scaled_equilibrium(spec, k)?;
    let (lo, hi) = quadrature_window(spec, k, p)?;
    let n = spec.n as f64;
    let phi_max = (0..=200)
        .map(|i| {
            let x = &eq.a + &((&eq.b - &eq.a) * (i as f64 / 200.0));
            eq.density(&x).to_f64()
        })
        .fold(0.0, f64::max);
    let h = params.bulk_factor / (deg * phi_max);
    let origin = match &spec.deformation {
        Deformation::Ground => None,
        Deformation::Fermi(d) => {
            let (s, t) = (d.s.to_f64(), d.t.to_f64());
            let modulus = (s * s + std::f64::consts::PI.powi(2)).sqrt();
            // nearest complex zero of 1 + e^{−s−n²tx²}
            let im = ((modulus + s) / 2.0).sqrt() / (n * t.sqrt());
            let xp = modulus.sqrt() / (n * t.sqrt());
            Some((im / 1.5, xp))
        }
    };
    let layout = Layout { bulk: (eq.a.to_f64(), eq.b.to_f64()), h, origin };
    let mut panels = layout.march(lo);
    panels.reverse();
    for pnl in panels.iter_mut() {
        *pnl = (pnl.1, pnl.0);
    }
    panels.extend(layout.march(hi));
    if let Deformation::Fermi(d) = &spec.deformation {
        for i in 0..=400 {
            let x = lo + (hi - lo) * i as f64 / 400.0;
            if x != 0.0 && !d.eval(&XReal::from_f64(x, p)).is_positive() {
                return Err(OpError::InvalidDeformation(format!("Q({x}) <= 0 inside the window")));
            }
        }
    }
    let m = params.m.unwrap_or_else(|| 40usize.max((2 * p.get() as usize).div_ceil(3)));
    let xp: Vec<(XReal, XReal)> = panels
        .iter()
        .map(|&(a, b)| (XReal::from_f64(a, p), XReal::from_f64(b, p)))
        .collect();
    let (nodes, gw) = composite_nodes(&xp, m, p)?;
    let weights = nodes
        .iter()
        .zip(gw)
        .map(|(x, w)| w * log_weight(spec, x).exp())
        .collect();
    Ok(Discretization { nodes, weights, window: (lo, hi), panels, points_per_panel: m })
}

/// Monic recurrence x P_k = P_{k+1} + β_k P_k + γ_k² P_{k−1}.
#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    /// γ_k², k = 1..=K (index k−1)
    pub gamma_sq: Vec<XReal>,
    /// β_k, k = 0..K−1
    pub beta: Vec<XReal>,
    /// h_k² = 1/∫P_k²ω, k = 0..K−1
    pub norms: Vec<XReal>,
    /// ∫ω
    pub mu0: XReal,
    pub n: usize,
    /// s (+∞ for the ground process)
    pub s: f64,
    pub precision: Precision,
    pub nodes: usize,
    pub panels: usize,
    pub window: (f64, f64),
}

impl RecurrenceTable {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    /// γ_k² for 1 ≤ k ≤ K.
    pub fn gamma_sq_at(&self, k: usize) -> &XReal {
        &self.gamma_sq[k - 1]
    }
}

fn dot(a: &[XReal], b: &[XReal], p: Precision) -> XReal {
    a.iter().zip(b).fold(XReal::zero(p), |acc, (x, y)| acc + x * y)
}

/// Lanczos on diag(x) with starting vector √w, fully reorthogonalised.
pub fn lanczos(disc: &Discretization, k: usize, p: Precision) -> Result<(Vec<XReal>, Vec<XReal>, XReal), OpError> {
    let n_nodes = disc.nodes.len();
    if 3 * k > n_nodes {
        let per = disc.points_per_panel.max(1);
        return Err(OpError::KTooLarge { k, nodes: n_nodes, required_panels: (3 * k).div_ceil(per) });
    }
    let mu0 = disc.weights.iter().fold(XReal::zero(p), |a, w| a + w);
    let inv = mu0.sqrt().recip();
    let mut qs: Vec<Vec<XReal>> = Vec::with_capacity(k + 1);
    qs.push(disc.weights.iter().map(|w| w.sqrt() * &inv).collect());
    let mut alpha = Vec::with_capacity(k);
    let mut beta = Vec::with_capacity(k);
    let tiny = p.eps_with_slack(0).sqrt();
    for j in 0..k {
        let qj = &qs[j];
        let mut v: Vec<XReal> = qj.iter().zip(&disc.nodes).map(|(q, x)| q * x).collect();
        let a = dot(qj, &v, p);
        for (vi, qi) in v.iter_mut().zip(qj) {
            *vi -= &(&a * qi);
        }
        if j > 0 {
            let b: &XReal = &beta[j - 1];
            for (vi, qi) in v.iter_mut().zip(&qs[j - 1]) {
                *vi -= &(b * qi);
            }
        }
        for q in qs.iter() {
            let c = dot(q, &v, p);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= &(&c * qi);
            }
        }
        let nb = dot(&v, &v, p).sqrt();
        if nb.to_f64() < tiny {
            return Err(OpError::PrecisionFailure { k: j + 1, value: nb.sqr().to_f64() });
        }
        let inv = nb.recip();
        qs.push(v.iter().map(|x| x * &inv).collect());
        alpha.push(a);
        beta.push(nb);
    }
    Ok((alpha, beta, mu0))
}

/// γ_k², β_k for k ≤ K at working precision D.
pub fn compute_recurrence(spec: &EnsembleSpec, k: usize, p: Precision) -> Result<RecurrenceTable, OpError> {
    compute_recurrence_with(spec, k, p, DiscretizationParams::default())
}

pub fn compute_recurrence_with(
    spec: &EnsembleSpec,
    k: usize,
    p: Precision,
    params: DiscretizationParams,
) -> Result<RecurrenceTable, OpError> {
    let disc = discretize(spec, k, p, params)?;
    let (alpha, b, mu0) = lanczos(&disc, k, p)?;
    let gamma_sq: Vec<XReal> = b.iter().map(|x| x.sqr()).collect();
    for (i, g) in gamma_sq.iter().enumerate() {
        if !g.is_positive() {
            return Err(OpError::PrecisionFailure { k: i + 1, value: g.to_f64() });
        }
    }
    let mut norms = Vec::with_capacity(k);
    let mut prod = mu0.clone();
    for i in 0..k {
        if i > 0 {
            prod = &prod * &gamma_sq[i - 1];
        }
        norms.push(prod.recip());
    }
    Ok(RecurrenceTable {
        gamma_sq,
        beta: alpha,
        norms,
        mu0,
        n: spec.n,
        s: spec.deformation.s_f64(),
        precision: p,
        nodes: disc.nodes.len(),
        panels: disc.panels.len(),
        window: disc.window,
    })
}

/// Orthonormal p_0..p_n at x and their derivatives.
fn orthonormal(tab: &RecurrenceTable, n: usize, x: &XReal) -> (Vec<XReal>, Vec<XReal>) {
    let p = tab.precision;
    let mut v = Vec::with_capacity(n + 1);
    let mut d = Vec::with_capacity(n + 1);
    v.push(tab.mu0.sqrt().recip());
    d.push(XReal::zero(p));
    for k in 0..n {
        let g_next = tab.gamma_sq[k].sqrt();
        let mut num = &(x - &tab.beta[k]) * &v[k];
        let mut dnum = &v[k] + &(&(x - &tab.beta[k]) * &d[k]);
        if k > 0 {
            let g = tab.gamma_sq[k - 1].sqrt();
            num -= &(&g * &v[k - 1]);
            dnum -= &(&g * &d[k - 1]);
        }
        v.push(num / &g_next);
        d.push(dnum / &g_next);
    }
    (v, d)
}

/// Σ_{k<n} p_k(x) p_k(y) by direct summation (reference for tests).
pub fn kernel_sum_direct(tab: &RecurrenceTable, spec: &EnsembleSpec, x: &XReal, y: &XReal) -> Result<XReal, OpError> {
    let n = spec.n;
    if tab.k() < n {
        return Err(OpError::TableTooShort { k: tab.k(), n });
    }
    let (px, _) = orthonormal(tab, n, x);
    let (py, _) = orthonormal(tab, n, y);
    let s = px.iter().zip(&py).take(n).fold(XReal::zero(tab.precision), |a, (u, v)| a + u * v);
    Ok(s * ((log_weight(spec, x) + log_weight(spec, y)) * 0.5).exp())
}

/// K_n(x, y) = √(ω(x)ω(y)) Σ_{k<n} p_k(x)p_k(y) via Christoffel–Darboux.
pub fn cd_kernel(tab: &RecurrenceTable, spec: &EnsembleSpec, x: &XReal, y: &XReal) -> Result<XReal, OpError> {
    let n = spec.n;
    if tab.k() < n {
        return Err(OpError::TableTooShort { k: tab.k(), n });
    }
    let p = tab.precision;
    let x = x.with_precision(p);
    let y = y.with_precision(p);
    let g = tab.gamma_sq[n - 1].sqrt();
    let (px, dx) = orthonormal(tab, n, &x);
    let sum = if x == y {
        &g * &(&(&dx[n] * &px[n - 1]) - &(&dx[n - 1] * &px[n]))
    } else {
        let (py, _) = orthonormal(tab, n, &y);
        &g * &(&(&px[n] * &py[n - 1]) - &(&px[n - 1] * &py[n])) / &(&x - &y)
    };
    let pref = ((log_weight(spec, &x) + log_weight(spec, &y)) * 0.5).exp();
    Ok(sum * pref)
}

/// (nπφ_V(0))^{-1} K_n(ζ/(nπφ_V(0)), ξ/(nπφ_V(0))).
pub fn scaled_kernel(
    tab: &RecurrenceTable,
    spec: &EnsembleSpec,
    eq: &EquilibriumData,
    zeta: &XReal,
    xi: &XReal,
) -> Result<XReal, OpError> {
    let p = tab.precision;
    let c = XReal::pi(p) * &eq.phi_v0.with_precision(p) * (spec.n as f64);
    let k = cd_kernel(tab, spec, &(zeta.with_precision(p) / &c), &(xi.with_precision(p) / &c))?;
    Ok(k / c)
}
