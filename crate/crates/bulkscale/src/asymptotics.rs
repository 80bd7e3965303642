//! Closed-form large-n predictions.
//!
//! The Fermi-type factor log(1 + e^{−y−u²}) integrates to polylogarithms;
//! the same family of constants G_β(y) drives the Laplace expansion of
//! ∫ g log(1 + e^{−y−t f}) and hence the Szegő coefficients and the 1/n
//! corrections to the recurrence coefficients.

use crate::equilibrium::{EqError, EquilibriumData};
use crate::numerics::quad::{graded_panels, graded_panels_rev, to_xpanels, uniform_panels};
use crate::numerics::{composite_quad, Poly, Precision, QuadError, Series, XReal};
use crate::orthopoly::{log_sigma, Deformation, EnsembleSpec};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymError {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("series reversion breaks down: f''(0) = {0} is not positive")]
    Reversion(f64),
    #[error("f(0) and f'(0) must vanish")]
    NotCritical,
    #[error("minimum of f on [{a}, {b}] is not unique at 0 (f({x}) = {fx:e})")]
    NotUniqueMinimum { a: f64, b: f64, x: f64, fx: f64 },
    #[error("origin must lie inside ({a}, {b})")]
    Window { a: f64, b: f64 },
    #[error("quadrature: {0}")]
    Quad(#[from] QuadError),
    #[error("equilibrium: {0}")]
    Eq(#[from] EqError),
}

/// log(1 + e^z) without overflow.
fn log1p_exp(z: &XReal) -> XReal {
    if z.is_positive() {
        z + &(-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Γ(m/2) for m ≥ 1.
pub fn gamma_half(m: usize, p: Precision) -> XReal {
    assert!(m >= 1);
    let (mut g, mut k) = if m % 2 == 0 {
        (XReal::one(p), 2usize)
    } else {
        (XReal::pi(p).sqrt(), 1usize)
    };
    while k < m {
        g = g * (k as f64 / 2.0);
        k += 2;
    }
    g
}

/// Li_ν(x) for −1 ≤ x ≤ 0 and ν > 0.
///
/// Li_ν(−y) = −Σ (−1)^j y^{j+1}/(j+1)^ν is summed with the
/// Cohen–Rodriguez Villegas–Zagier acceleration, whose error falls like 5.8^{−m}.
pub fn li_nu(nu: &XReal, x: &XReal) -> Result<XReal, AsymError> {
    let p = x.precision();
    if x.is_positive() || x < &XReal::from_f64(-1.0, p) || x.is_nan() {
        return Err(AsymError::Domain(format!("Li_ν needs −1 ≤ x ≤ 0, got {}", x.to_sci(12))));
    }
    if !nu.is_positive() {
        return Err(AsymError::Domain(format!("ν must be positive, got {}", nu.to_sci(12))));
    }
    if x.is_zero() {
        return Ok(XReal::zero(p));
    }
    let ly = (-x).ln();
    let m = (1.31 * p.get() as f64).ceil() as usize + 10;
    let mut d = (XReal::from_f64(8.0, p).sqrt() + 3.0).powi(m);
    d = (&d + &d.recip()) * 0.5;
    let mut b = XReal::from_f64(-1.0, p);
    let mut c = -&d;
    let mut s = XReal::zero(p);
    let mf = m as f64;
    for k in 0..m {
        let j = (k + 1) as f64;
        let a_k = (&ly * j - &(nu * &XReal::from_f64(j, p).ln())).exp();
        c = &b - &c;
        s += &(&c * &a_k);
        let kf = k as f64;
        b = b * ((kf + mf) * (kf - mf)) / ((kf + 0.5) * (kf + 1.0));
    }
    Ok(-(s / d))
}

/// Li_{3/2}(x) on [−1, 0].
pub fn li_three_half(x: &XReal) -> Result<XReal, AsymError> {
    li_nu(&XReal::ratio(3, 2, x.precision()), x)
}

/// Gauss points per panel when the nearest singularity sits three half-widths away.
fn panel_order(p: Precision) -> usize {
    let rho = 3.0 + 10f64.sqrt();
    (p.get() as f64 * std::f64::consts::LN_10 / (2.0 * rho.ln())).ceil() as usize + 6
}

/// Im √(w + iπ): distance of the first complex zero of 1 + e^{−w−u²} from ℝ.
fn fermi_pole_distance(w: f64) -> f64 {
    let m = w.hypot(std::f64::consts::PI);
    ((m - w) / 2.0).sqrt()
}

/// G_β(y) = ∫_ℝ u^β log(1 + e^{−y−u²}) du by quadrature; zero for odd β.
pub fn g_beta(beta: usize, y: &XReal) -> Result<XReal, AsymError> {
    let p = y.precision();
    if beta % 2 == 1 {
        return Ok(XReal::zero(p));
    }
    let yf = y.to_f64();
    let tail = (p.get() as f64 + 8.0) * std::f64::consts::LN_10;
    let x0 = ((-yf).max(0.0) + tail).sqrt();
    let x_max = ((-yf).max(0.0) + tail + beta as f64 * x0.ln()).sqrt() + 1.0;
    let w = (fermi_pole_distance(-yf) / 1.5).min(0.5);
    let k = (x_max / w).ceil() as usize;
    let panels = uniform_panels(&XReal::zero(p), &XReal::from_f64(x_max, p), k);
    let v = composite_quad(
        |u| {
            let z = -(y + &u.sqr());
            u.powi(beta) * log1p_exp(&z)
        },
        &panels,
        panel_order(p),
        p,
    )?;
    Ok(v * 2.0)
}

/// G_β(y) = −Γ((β+1)/2)·Li_{(β+3)/2}(−e^{−y}) for even β and y ≥ 0.
pub fn g_beta_polylog(beta: usize, y: &XReal) -> Result<XReal, AsymError> {
    let p = y.precision();
    if beta % 2 == 1 {
        return Ok(XReal::zero(p));
    }
    if y.is_negative() {
        return Err(AsymError::Domain(format!("polylog route needs y ≥ 0, got {}", y.to_sci(12))));
    }
    let nu = XReal::ratio(beta as i64 + 3, 2, p);
    let li = li_nu(&nu, &(-(-y).exp()))?;
    Ok(-(gamma_half(beta + 1, p) * li))
}

/// G₀(s) by direct quadrature.
pub fn g0_quadrature(s: &XReal) -> Result<XReal, AsymError> {
    g_beta(0, s)
}

/// G₀(s) = ∫ log(1 + e^{−s−x²}) dx; polylog for s ≥ 0, quadrature below.
pub fn g0(s: &XReal) -> Result<XReal, AsymError> {
    if s.is_inf_pos() {
        return Ok(XReal::zero(s.precision()));
    }
    if s.is_negative() {
        g0_quadrature(s)
    } else {
        g_beta_polylog(0, s)
    }
}

/// Truncated Laplace expansion t^{−1/2} Σ_k ĝ_{2k} G_{2k}(y) t^{−k}.
#[derive(Clone, Debug)]
pub struct LaplaceExpansion {
    /// Taylor coefficients of ĝ at 0, all orders up to 2N
    pub ghat: Vec<XReal>,
    /// G_{2k}(y) for k = 0..=N
    pub g_even: Vec<XReal>,
    pub y: XReal,
    /// half the distance to the nearest nonzero critical point of f
    pub delta: f64,
}

impl LaplaceExpansion {
    pub fn terms(&self) -> usize {
        self.g_even.len()
    }

    /// Sum through k = `last`.
    pub fn eval_truncated(&self, t: &XReal, last: usize) -> XReal {
        let p = t.precision();
        let mut acc = XReal::zero(p);
        let mut tk = XReal::one(p);
        for k in 0..=last.min(self.g_even.len() - 1) {
            acc += &(&self.ghat[2 * k] * &self.g_even[k] / &tk);
            tk = tk * t;
        }
        acc / t.sqrt()
    }

    pub fn eval(&self, t: &XReal) -> XReal {
        self.eval_truncated(t, self.g_even.len() - 1)
    }
}

fn sample_points(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let n = 2000;
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

/// Builds the expansion of F(t) = ∫_a^b g log(1 + e^{−y−t f}) through k = `last`.
///
/// x = u·v(u) is obtained by reverting u = x·√(f(x)/x²), and ĝ(u) = g(x(u))·x′(u).
pub fn laplace_expand(
    g: &Poly,
    f: &Poly,
    y: &XReal,
    last: usize,
    window: (f64, f64),
) -> Result<LaplaceExpansion, AsymError> {
    let p = y.precision();
    let (a, b) = window;
    if !(a < 0.0 && b > 0.0) {
        return Err(AsymError::Window { a, b });
    }
    if !f.coeff(0).is_zero() || !f.coeff(1).is_zero() {
        return Err(AsymError::NotCritical);
    }
    let f2 = f.coeff(2);
    if !f2.is_positive() {
        return Err(AsymError::Reversion(2.0 * f2.to_f64()));
    }
    let ff = f.with_precision(p);
    let f2f = f2.to_f64();
    let mut delta = a.abs().max(b);
    let df = ff.deriv();
    for x in sample_points(a, b) {
        if x == 0.0 {
            continue;
        }
        let fx = ff.eval_f64(x);
        // f ≥ f''(0)x²/4 away from a unique minimum, at least near 0
        if fx <= 0.0 || (x.abs() < 1e-2 && fx < 0.25 * f2f * x * x) {
            return Err(AsymError::NotUniqueMinimum { a, b, x, fx });
        }
        let slope = df.eval_f64(x);
        if slope * x <= 0.0 {
            delta = delta.min(0.5 * x.abs());
        }
    }
    let order = 2 * last + 2;
    let hx = Series::new((0..=order).map(|k| ff.coeff(k + 2)).collect(), order);
    let x_ser = Series::new(vec![XReal::zero(p), XReal::one(p)], order);
    let w = x_ser.mul(&hx.sqrt());
    let x_of_u = w.revert().ok_or(AsymError::Reversion(2.0 * f2f))?;
    let gs = Series::from_poly(&g.with_precision(p), order);
    let ghat = gs.compose(&x_of_u).mul(&x_of_u.deriv());
    let g_even = (0..=last).map(|k| g_beta(2 * k, y)).collect::<Result<Vec<_>, _>>()?;
    Ok(LaplaceExpansion { ghat: ghat.c, g_even, y: y.clone(), delta })
}

/// F(t) = ∫_a^b g log(1 + e^{−y−t f}) dx by graded quadrature around 0.
pub fn laplace_integral(g: &Poly, f: &Poly, y: &XReal, t: &XReal, window: (f64, f64)) -> Result<XReal, AsymError> {
    let p = y.precision();
    let (a, b) = window;
    if !(a < 0.0 && b > 0.0) {
        return Err(AsymError::Window { a, b });
    }
    let f2 = f.coeff(2).to_f64();
    if f2 <= 0.0 {
        return Err(AsymError::Reversion(2.0 * f2));
    }
    let d = fermi_pole_distance(-y.to_f64()) / (t.to_f64() * f2).sqrt();
    let w0 = d / 1.5;
    let mut pieces = graded_panels_rev(a, 0.0, w0, 1.5, 0.25);
    pieces.extend(graded_panels(0.0, b, w0, 1.5, 0.25));
    let (gp, fp) = (g.with_precision(p), f.with_precision(p));
    let v = composite_quad(
        |x| {
            let z = -(y + &(t * &fp.eval(x)));
            gp.eval(x) * log1p_exp(&z)
        },
        &to_xpanels(&pieces, p),
        panel_order(p),
        p,
    )?;
    Ok(v)
}

/// ĥ₀, ĥ₁ and ĥ(z).
#[derive(Clone, Debug)]
pub struct HhatCoeffs {
    pub h0: XReal,
    pub h1: XReal,
    pub a: f64,
    pub b: f64,
}

impl HhatCoeffs {
    /// ĥ₀·((z−a)(z−b))^{1/2}/z with the cut on [a, b].
    pub fn eval(&self, z: C64) -> C64 {
        let h0 = self.h0.to_f64();
        h0 * (z - self.a).sqrt() * (z - self.b).sqrt() / z
    }
}

/// ĥ₀ = G₀(s)/(2π√(|a|b t)) and ĥ₁ = −(a+b)/2·ĥ₀.
pub fn hhat_coeffs(eq: &EquilibriumData, s: &XReal, t: &XReal) -> Result<HhatCoeffs, AsymError> {
    let p = eq.precision;
    if !t.is_positive() {
        return Err(AsymError::Domain(format!("t must be positive, got {}", t.to_sci(12))));
    }
    let ab = -(&eq.a * &eq.b);
    let h0 = g0(&s.with_precision(p))? / (XReal::pi(p) * 2.0 * (ab * t).sqrt());
    let h1 = -(&(&eq.a + &eq.b) * 0.5) * &h0;
    Ok(HhatCoeffs { h0, h1, a: eq.a.to_f64(), b: eq.b.to_f64() })
}

/// Finite-n Szegő coefficients h₀(n), h₁(n) of log σ_n on the support.
///
/// With x = c + r cosθ both are plain θ-integrals over [0, π]; panels are
/// graded about the preimage of 0 at the 1/n scale of σ_n.
pub fn szego_h(spec: &EnsembleSpec, eq: &EquilibriumData) -> Result<(XReal, XReal), AsymError> {
    let p = eq.precision;
    let d = match &spec.deformation {
        Deformation::Ground => return Ok((XReal::zero(p), XReal::zero(p))),
        Deformation::Fermi(d) => d,
    };
    let (c, r) = (eq.c.to_f64(), eq.r.to_f64());
    let th0 = (-c / r).acos();
    let sf = d.s.to_f64();
    let dx = fermi_pole_distance(sf) / (d.t.to_f64().sqrt() * spec.n as f64);
    let w0 = dx / (1.5 * r * th0.sin());
    let mut pieces = graded_panels_rev(0.0, th0, w0, 1.5, 0.25);
    pieces.extend(graded_panels(th0, std::f64::consts::PI, w0, 1.5, 0.25));
    let panels = to_xpanels(&pieces, p);
    let m = panel_order(p);
    let x_of = |th: &XReal| &eq.c + &(&eq.r * &th.cos());
    let two_pi = XReal::pi(p) * 2.0;
    let h0 = composite_quad(|th| log_sigma(spec, &x_of(th)), &panels, m, p)? / &two_pi;
    let m1 = composite_quad(
        |th| {
            let x = x_of(th);
            &x * &log_sigma(spec, &x)
        },
        &panels,
        m,
        p,
    )? / &two_pi;
    let h1 = m1 - &(&(&eq.a + &eq.b) * 0.5) * &h0;
    Ok((h0, h1))
}

/// Where Q_osc came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QoscSource {
    ModelRhp,
    Perturbative,
}

/// Constants entering the predictions.
#[derive(Clone, Debug)]
pub struct Ingredients {
    pub t: f64,
    pub big_t: f64,
    pub kappa: f64,
    pub g0: f64,
    pub q_osc: f64,
    pub q_source: QoscSource,
    pub phi_v0: f64,
    pub a: f64,
    pub b: f64,
    pub q_a: f64,
    pub q_b: f64,
}

/// γ_n²(∞) = (b−a)²/16 and β_n(∞) = (a+b)/2 + (1/q(b) − 1/q(a))/(2n(b−a)).
pub fn predict_ground(eq: &EquilibriumData, n: usize) -> (XReal, XReal) {
    let w = &eq.b - &eq.a;
    let gamma_sq = w.sqr() / 16.0;
    let qa = eq.q_poly.eval(&eq.a);
    let qb = eq.q_poly.eval(&eq.b);
    let corr = (qb.recip() - qa.recip()) / (&w * (2.0 * n as f64));
    let beta = (&eq.a + &eq.b) * 0.5 + corr;
    (gamma_sq, beta)
}

/// γ_n²(s), β_n(s) through order 1/n, given Q_osc(s, T).
pub fn predict_deformed(
    eq: &EquilibriumData,
    t: &XReal,
    s: &XReal,
    q_osc: f64,
    n: usize,
) -> Result<(XReal, XReal), AsymError> {
    let p = eq.precision;
    let (g_inf, b_inf) = predict_ground(eq, n);
    if s.is_inf_pos() {
        return Ok((g_inf, b_inf));
    }
    let t = t.with_precision(p);
    let bp = eq.effective_params(&t)?;
    let pref = &bp.big_t / &(XReal::pi(p) * &eq.phi_v0) / (n as f64);
    let q = XReal::from_f64(q_osc, p);
    let arg = &eq.kappa * (2.0 * n as f64);
    let (cs, sn) = (arg.cos(), arg.sin());
    let w = &eq.b - &eq.a;
    let apb = &eq.a + &eq.b;
    let rab = (-(&eq.a * &eq.b)).sqrt();
    let dg = &pref * &(&w * 0.5) * &q * &cs;
    let g0s = g0(&s.with_precision(p))?;
    let first = &apb / &rab * &g0s / &(XReal::pi(p) * 2.0);
    let second = &q * 2.0 / &w * &(&apb * &cs + &(&rab * 2.0 * &sn));
    let db = &pref * &(first - second);
    Ok((g_inf + dg, b_inf + db))
}

/// Predictions over a list of n.
#[derive(Clone, Debug)]
pub struct PredictionSet {
    pub ns: Vec<usize>,
    pub gamma_sq_s: Vec<f64>,
    pub beta_s: Vec<f64>,
    pub gamma_sq_inf: Vec<f64>,
    pub beta_inf: Vec<f64>,
    pub ingredients: Ingredients,
}

impl PredictionSet {
    pub fn build(
        eq: &EquilibriumData,
        t: &XReal,
        s: &XReal,
        q_osc: f64,
        q_source: QoscSource,
        ns: &[usize],
    ) -> Result<Self, AsymError> {
        let p = eq.precision;
        let bp = eq.effective_params(&t.with_precision(p))?;
        let ingredients = Ingredients {
            t: t.to_f64(),
            big_t: bp.big_t.to_f64(),
            kappa: eq.kappa.to_f64(),
            g0: g0(&s.with_precision(p))?.to_f64(),
            q_osc,
            q_source,
            phi_v0: eq.phi_v0.to_f64(),
            a: eq.a.to_f64(),
            b: eq.b.to_f64(),
            q_a: eq.q_poly.eval(&eq.a).to_f64(),
            q_b: eq.q_poly.eval(&eq.b).to_f64(),
        };
        let mut out = PredictionSet {
            ns: ns.to_vec(),
            gamma_sq_s: Vec::new(),
            beta_s: Vec::new(),
            gamma_sq_inf: Vec::new(),
            beta_inf: Vec::new(),
            ingredients,
        };
        for &n in ns {
            let (gi, bi) = predict_ground(eq, n);
            let (gs, bs) = predict_deformed(eq, t, s, q_osc, n)?;
            out.gamma_sq_inf.push(gi.to_f64());
            out.beta_inf.push(bi.to_f64());
            out.gamma_sq_s.push(gs.to_f64());
            out.beta_s.push(bs.to_f64());
        }
        Ok(out)
    }
}
