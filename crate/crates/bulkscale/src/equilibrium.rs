//! One-cut equilibrium measures for polynomial potentials.
//!
//! Everything is expressed through the Chebyshev substitution x = c + r·cosθ
//! on the support [a, b] = [c − r, c + r]. With g(θ) = sin²θ·q(c + r·cosθ)
//! expanded as Σ g_k cos kθ, the density, the logarithmic potential and the
//! mass function all have short closed forms.

use crate::numerics::{composite_quad, Poly, Precision, Series, XReal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EqError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("endpoint Newton iteration stalled after {iters} steps (residual {residual:e})")]
    NewtonStalled { iters: usize, residual: f64 },
    #[error("not one-cut regular: q(x) <= 0 at x = {x}")]
    NotRegular { x: f64 },
    #[error("variational inequality fails at x = {x} (residual {residual:e})")]
    InequalityFails { x: f64, residual: f64 },
    #[error("origin not in the bulk: support [{a}, {b}]")]
    OriginOutsideBulk { a: f64, b: f64 },
    #[error("t must be positive (got {0})")]
    NonPositiveT(f64),
    #[error("quadrature: {0}")]
    Quad(#[from] crate::numerics::QuadError),
}

/// Polynomial potential V with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub poly: Poly,
}

impl PotentialSpec {
    pub fn new(coeffs: Vec<XReal>) -> Result<Self, EqError> {
        let poly = Poly::new(coeffs);
        let d = poly.degree();
        if d < 2 || d % 2 == 1 {
            return Err(EqError::InvalidPotential(format!("degree {d} is not even and positive")));
        }
        if !poly.leading().is_positive() {
            return Err(EqError::InvalidPotential("leading coefficient must be positive".into()));
        }
        Ok(PotentialSpec { poly })
    }

    pub fn from_f64(c: &[f64], p: Precision) -> Result<Self, EqError> {
        Self::new(c.iter().map(|&x| XReal::from_f64(x, p)).collect())
    }

    pub fn eval(&self, x: &XReal) -> XReal {
        self.poly.eval(x)
    }

    /// λ·V
    pub fn scaled(&self, lambda: &XReal) -> PotentialSpec {
        PotentialSpec { poly: self.poly.scale(lambda) }
    }

    pub fn precision(&self) -> Precision {
        self.poly.precision()
    }
}

/// (1/π)∫₀^π cos^j θ dθ
fn cos_moment(j: usize, p: Precision) -> XReal {
    if j % 2 == 1 {
        return XReal::zero(p);
    }
    let mut v = XReal::one(p);
    // binom(j, j/2) / 2^j = Π_{i=1}^{j/2} (2i-1)/(2i)
    for i in 1..=j / 2 {
        v = v * ((2 * i - 1) as f64) / ((2 * i) as f64);
    }
    v
}

/// (1/π)∫₀^π f(c + r cosθ) cos^k θ dθ for a polynomial f.
fn theta_mean(f: &Poly, c: &XReal, r: &XReal, k: usize) -> XReal {
    let p = f.precision();
    let a = f.affine(c, r);
    a.c.iter()
        .enumerate()
        .fold(XReal::zero(p), |acc, (j, aj)| acc + aj * &cos_moment(j + k, p))
}

/// Chebyshev-cosine coefficients of a polynomial in y = cosθ.
fn cosine_coeffs(poly_y: &Poly) -> Vec<XReal> {
    let p = poly_y.precision();
    let n = poly_y.degree();
    let mut g = vec![XReal::zero(p); n + 1];
    for (j, aj) in poly_y.c.iter().enumerate() {
        if aj.is_zero() {
            continue;
        }
        // cos^j = 2^{-j} Σ_i binom(j,i) cos((j-2i)θ)
        let scale = aj / &XReal::from_f64(2.0, p).powi(j);
        let mut binom = XReal::one(p);
        for i in 0..=j {
            if i > 0 {
                binom = binom * ((j - i + 1) as f64) / (i as f64);
            }
            let k = (j as i64 - 2 * i as i64).unsigned_abs() as usize;
            g[k] += &(&scale * &binom);
        }
    }
    g
}

/// Regular one-cut equilibrium data.
#[derive(Clone, Debug)]
pub struct EquilibriumData {
    pub potential: PotentialSpec,
    pub a: XReal,
    pub b: XReal,
    /// centre (a+b)/2 and half-width (b−a)/2
    pub c: XReal,
    pub r: XReal,
    pub q_poly: Poly,
    pub ell: XReal,
    pub kappa: XReal,
    pub phi_v0: XReal,
    /// cosine coefficients of sin²θ·q(c + r cosθ)
    pub g: Vec<XReal>,
    pub precision: Precision,
}

/// Bulk coupling constants.
#[derive(Clone, Debug)]
pub struct BulkParams {
    pub t: XReal,
    pub big_t: XReal,
    pub u: XReal,
}

/// Taylor data of φ₀(x) = ∫₀ˣ πφ_V at the origin.
#[derive(Clone, Debug)]
pub struct Phi0Series {
    pub forward: Series,
    pub inverse: Series,
}

const MAX_NEWTON: usize = 200;

fn moment_residual(v: &PotentialSpec, c: &XReal, r: &XReal) -> (XReal, XReal, [[XReal; 2]; 2]) {
    let dv = v.poly.deriv();
    let xdv = dv.shift_up();
    let ddv = dv.deriv();
    let dxdv = xdv.deriv();
    let f1 = theta_mean(&dv, c, r, 0) * 0.5;
    let f2 = theta_mean(&xdv, c, r, 0) * 0.5 - 1.0;
    let j = [
        [theta_mean(&ddv, c, r, 0) * 0.5, theta_mean(&ddv, c, r, 1) * 0.5],
        [theta_mean(&dxdv, c, r, 0) * 0.5, theta_mean(&dxdv, c, r, 1) * 0.5],
    ];
    (f1, f2, j)
}

fn initial_guess(v: &PotentialSpec) -> Vec<(f64, f64)> {
    let alpha = v.poly.coeff(2).to_f64();
    let beta = v.poly.coeff(1).to_f64();
    let mut out = Vec::new();
    if alpha > 0.0 {
        out.push((-beta / (2.0 * alpha), (2.0 / alpha).sqrt()));
    }
    let d = v.poly.degree();
    let lead = v.poly.leading().to_f64();
    let mut binom = 1.0;
    for i in 1..=d / 2 {
        binom *= (2 * i - 1) as f64 / (2 * i) as f64;
    }
    // d·lead·r^d·binom/2 = 1 for the pure monomial
    let r = (2.0 / (d as f64 * lead * binom)).powf(1.0 / d as f64);
    out.push((0.0, r));
    out.push((0.0, 2.0 * r));
    out
}

fn newton_endpoints(v: &PotentialSpec, c0: f64, r0: f64, p: Precision) -> Result<(XReal, XReal), EqError> {
    let mut c = XReal::from_f64(c0, p);
    let mut r = XReal::from_f64(r0, p);
    let tol = p.eps_with_slack(4);
    let norm = |a: &XReal, b: &XReal| a.abs().max(&b.abs());
    let (mut f1, mut f2, mut j) = moment_residual(v, &c, &r);
    let mut res = norm(&f1, &f2);
    for it in 0..MAX_NEWTON {
        if res.to_f64() < tol {
            return Ok((c, r));
        }
        let det = &j[0][0] * &j[1][1] - &j[0][1] * &j[1][0];
        if det.is_zero() {
            return Err(EqError::NewtonStalled { iters: it, residual: res.to_f64() });
        }
        let dc = (&j[1][1] * &f1 - &j[0][1] * &f2) / &det;
        let dr = (&j[0][0] * &f2 - &j[1][0] * &f1) / &det;
        let mut step = XReal::one(p);
        loop {
            let cn = &c - &(&dc * &step);
            let rn = &r - &(&dr * &step);
            if rn.is_positive() {
                let (g1, g2, gj) = moment_residual(v, &cn, &rn);
                let rn_res = norm(&g1, &g2);
                if rn_res < res || step.to_f64() < 1e-12 {
                    c = cn;
                    r = rn;
                    f1 = g1;
                    f2 = g2;
                    j = gj;
                    res = rn_res;
                    break;
                }
            }
            step = step * 0.5;
            if step.to_f64() < 1e-12 {
                return Err(EqError::NewtonStalled { iters: it, residual: res.to_f64() });
            }
        }
    }
    if res.to_f64() < tol {
        Ok((c, r))
    } else {
        Err(EqError::NewtonStalled { iters: MAX_NEWTON, residual: res.to_f64() })
    }
}

/// Polynomial part of V′(z)/(2√((z−a)(z−b))) at infinity.
fn q_polynomial(v: &PotentialSpec, a: &XReal, b: &XReal) -> Poly {
    let p = v.precision();
    let dv = v.poly.deriv();
    let d1 = dv.degree();
    // (1 − (a+b)w + ab w²)^{-1/2}
    let inner = Series::new(vec![XReal::one(p), -(a + b), a * b], d1 + 1);
    let s = inner.pow(&XReal::ratio(-1, 2, p));
    let mut q = Vec::new();
    for m in 0..d1.max(1) {
        let mut acc = XReal::zero(p);
        for j in (m + 1)..=d1 {
            acc += &(&dv.c[j] * &s.c[j - 1 - m]);
        }
        q.push(acc * 0.5);
    }
    Poly::new(q)
}

/// Solves the one-cut problem for V, verifying regularity and that 0 is a bulk point.
pub fn solve_equilibrium(v: &PotentialSpec, p: Precision) -> Result<EquilibriumData, EqError> {
    let v = PotentialSpec { poly: v.poly.with_precision(p) };
    let mut last = None;
    let mut found = None;
    for (c0, r0) in initial_guess(&v) {
        match newton_endpoints(&v, c0, r0, p) {
            Ok(cr) => {
                found = Some(cr);
                break;
            }
            Err(e) => last = Some(e),
        }
    }
    let (c, r) = match found {
        Some(cr) => cr,
        None => return Err(last.unwrap_or(EqError::NewtonStalled { iters: 0, residual: f64::NAN })),
    };
    let a = &c - &r;
    let b = &c + &r;
    let q_poly = q_polynomial(&v, &a, &b);
    // regularity on [a, b]
    let n_samples = 1000;
    for k in 0..=n_samples {
        let x = &a + &(&(&b - &a) * (k as f64 / n_samples as f64));
        if !q_poly.eval(&x).is_positive() {
            return Err(EqError::NotRegular { x: x.to_f64() });
        }
    }
    if !(a.is_negative() && b.is_positive()) {
        return Err(EqError::OriginOutsideBulk { a: a.to_f64(), b: b.to_f64() });
    }
    let qy = q_poly.affine(&c, &r);
    let one_minus_y2 = Poly::new(vec![XReal::one(p), XReal::zero(p), XReal::from_f64(-1.0, p)]);
    let g = cosine_coeffs(&qy.mul(&one_minus_y2));
    let mut eq = EquilibriumData {
        potential: v,
        phi_v0: XReal::zero(p),
        a,
        b,
        c,
        r,
        q_poly,
        ell: XReal::zero(p),
        kappa: XReal::zero(p),
        g,
        precision: p,
    };
    eq.ell = &(eq.log_potential(&eq.b) * 2.0) + &eq.potential.eval(&eq.b);
    eq.phi_v0 = eq.density(&XReal::zero(p));
    eq.kappa = eq.kappa_quadrature()?;
    eq.check_inequality()?;
    Ok(eq)
}

impl EquilibriumData {
    fn p(&self) -> Precision {
        self.precision
    }

    /// φ_V(x), zero off the support.
    pub fn density(&self, x: &XReal) -> XReal {
        if x <= &self.a || x >= &self.b {
            return XReal::zero(self.p());
        }
        let w = (&self.b - x) * (x - &self.a);
        w.sqrt() * self.q_poly.eval(x) / XReal::pi(self.p())
    }

    /// g(θ) = sin²θ·q(c + r cosθ)
    pub fn g_theta(&self, theta: &XReal) -> XReal {
        let s = theta.sin();
        s.sqr() * self.q_poly.eval(&(&self.c + &(&self.r * &theta.cos())))
    }

    /// Total mass r²·g₀ (equals 1).
    pub fn total_mass(&self) -> XReal {
        self.r.sqr() * &self.g[0]
    }

    /// U(x) = −∫ log|x − y| dμ_V(y).
    pub fn log_potential(&self, x: &XReal) -> XReal {
        let p = self.p();
        let y = (x - &self.c) / &self.r;
        let log_r2 = (&self.r * 0.5).ln();
        let r2 = self.r.sqr();
        let one = XReal::one(p);
        if y.abs() <= one {
            // Chebyshev recurrence for cos kθ₀
            let mut t_prev = one.clone();
            let mut t_cur = y.clone();
            let mut sum = XReal::zero(p);
            for k in 1..self.g.len() {
                sum += &(&(&self.g[k] * &t_cur) / (k as f64));
                let t_next = &(&(&y * &t_cur) * 2.0) - &t_prev;
                t_prev = t_cur;
                t_cur = t_next;
            }
            -(r2 * (&(&self.g[0] * &log_r2) - &sum))
        } else {
            let ya = y.abs();
            let rho = &ya - &(ya.sqr() - 1.0).sqrt();
            let eta = -rho.ln();
            let sgn = if y.is_negative() { -1.0 } else { 1.0 };
            let mut pw = one.clone();
            let mut sum = XReal::zero(p);
            for k in 1..self.g.len() {
                pw = &pw * &rho * sgn;
                sum += &(&(&self.g[k] * &pw) / (k as f64));
            }
            -(r2 * (&(&self.g[0] * &(&log_r2 + &eta)) - &sum))
        }
    }

    /// 2U(x) + V(x) − ℓ
    pub fn el_residual(&self, x: &XReal) -> XReal {
        &(&(self.log_potential(x) * 2.0) + &self.potential.eval(x)) - &self.ell
    }

    /// φ_b(x) = ∫_b^x √((s−a)(s−b)) q(s) ds, as (real, imaginary) parts of the + boundary value.
    pub fn phi_b(&self, x: &XReal) -> (XReal, XReal) {
        let p = self.p();
        if x >= &self.b {
            (self.el_residual(x) * 0.5, XReal::zero(p))
        } else if x > &self.a {
            (XReal::zero(p), -(XReal::pi(p) * self.mass_between(x, &self.b)))
        } else {
            (self.el_residual(x) * 0.5, -XReal::pi(p))
        }
    }

    fn theta_of(&self, x: &XReal) -> XReal {
        let y = (x - &self.c) / &self.r;
        let y = y.max(&y.lift(-1.0)).min(&y.lift(1.0));
        y.acos()
    }

    /// μ_V([x0, x1]) for a ≤ x0 ≤ x1 ≤ b, by Gauss quadrature in θ.
    pub fn mass_between(&self, x0: &XReal, x1: &XReal) -> XReal {
        let (t_hi, t_lo) = (self.theta_of(x0), self.theta_of(x1));
        self.theta_integral(&t_lo, &t_hi).unwrap_or_else(|_| XReal::zero(self.p()))
    }

    fn theta_integral(&self, lo: &XReal, hi: &XReal) -> Result<XReal, EqError> {
        let p = self.p();
        let m = 12 + 2 * self.g.len() + (p.get() as usize) / 2;
        let panels = crate::numerics::quad::uniform_panels(lo, hi, 4);
        let v = composite_quad(|th| self.g_theta(th), &panels, m, p)?;
        Ok(v * self.r.sqr() / XReal::pi(p))
    }

    fn kappa_quadrature(&self) -> Result<XReal, EqError> {
        let p = self.p();
        let th0 = self.theta_of(&XReal::zero(p));
        Ok(self.theta_integral(&XReal::zero(p), &th0)? * XReal::pi(p))
    }

    /// πμ_V([a, 0])
    pub fn kappa_left(&self) -> XReal {
        let p = self.p();
        let th0 = self.theta_of(&XReal::zero(p));
        self.theta_integral(&th0, &XReal::pi(p)).unwrap_or_else(|_| XReal::zero(p)) * XReal::pi(p)
    }

    fn check_inequality(&self) -> Result<(), EqError> {
        let width = (&self.b - &self.a).to_f64();
        for k in 1..=300 {
            let off = width * k as f64 / 100.0;
            for x in [&self.b + off, &self.a - off] {
                let res = self.el_residual(&x);
                if !res.is_positive() {
                    return Err(EqError::InequalityFails { x: x.to_f64(), residual: res.to_f64() });
                }
            }
        }
        Ok(())
    }

    /// T = πφ_V(0)/√t and u = 1/T².
    pub fn effective_params(&self, t: &XReal) -> Result<BulkParams, EqError> {
        if !t.is_positive() {
            return Err(EqError::NonPositiveT(t.to_f64()));
        }
        let big_t = XReal::pi(self.p()) * &self.phi_v0 / t.sqrt();
        let u = big_t.sqr().recip();
        Ok(BulkParams { t: t.clone(), big_t, u })
    }

    /// Taylor coefficients of φ₀ at 0 up to `order`, with the reverted series.
    pub fn phi0_taylor(&self, order: usize) -> Phi0Series {
        let p = self.p();
        let order = order.max(1);
        let ab = &self.a * &self.b;
        // (b−t)(t−a) = −ab·(1 − t(1/a + 1/b) + t²/(ab))
        let lin = -(self.a.recip() + self.b.recip());
        let inner = Series::new(vec![XReal::one(p), lin, ab.recip()], order);
        let root = inner.sqrt().scale(&(-&ab).sqrt());
        let q = Series::from_poly(&self.q_poly, order);
        let forward = root.mul(&q).integrate();
        let inverse = forward.revert().expect("φ₀′(0) > 0");
        Phi0Series { forward, inverse }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn cosine_coefficients_of_powers() {
        // cos^2 = 1/2 + cos2θ/2
        let g = cosine_coeffs(&Poly::from_f64(&[0.0, 0.0, 1.0], p()));
        assert_eq!(g[0].to_f64(), 0.5);
        assert_eq!(g[1].to_f64(), 0.0);
        assert_eq!(g[2].to_f64(), 0.5);
    }

    #[test]
    fn moments() {
        assert_eq!(cos_moment(2, p()).to_f64(), 0.5);
        assert_eq!(cos_moment(4, p()).to_f64(), 0.375);
        assert!(cos_moment(3, p()).is_zero());
    }

    #[test]
    fn rejects_bad_potentials() {
        assert!(PotentialSpec::from_f64(&[0.0, 0.0, 0.0, 1.0], p()).is_err());
        assert!(PotentialSpec::from_f64(&[0.0, 0.0, -1.0], p()).is_err());
    }

    #[test]
    fn shifted_potential_moves_off_origin() {
        // V = 2(x − 3)² has support [2, 4]
        let v = PotentialSpec::from_f64(&[18.0, -12.0, 2.0], p()).unwrap();
        match solve_equilibrium(&v, p()) {
            Err(EqError::OriginOutsideBulk { a, b }) => {
                assert!((a - 2.0).abs() < 1e-12 && (b - 4.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn double_well_is_not_one_cut() {
        let v = PotentialSpec::from_f64(&[0.0, 0.0, -3.0, 0.0, 1.0], p()).unwrap();
        assert!(solve_equilibrium(&v, p()).is_err());
    }
}
