//! Model Riemann–Hilbert problem for λ(ζ) = 1/(1 + e^{−H(ζ)}), H = s + uζ².
//!
//! The six-ray problem is folded onto the real line: undoing the lenses gives
//! Ψ̃ with the single jump I + λE₁₂, and X = Ψ̃·B_±^{−1}·e^{iζσ₃} then solves a
//! small-norm problem on ℝ with
//!
//!   J_X(x) = I + (1 − λ(x)) [[1, −e^{−2ix}], [e^{2ix}, −1]],
//!
//! which decays like e^{−s−ux²}. X = I + C[ν] is discretised with sinc
//! collocation, for which the Cauchy boundary operators act exactly on each
//! basis function. Φ_∞ and L_s = Φ_∞Φ_sin^{−1} are rebuilt from X.
//! Everything here runs in f64.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

pub type Mat2 = [[C64; 2]; 2];

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RhpError {
    #[error("linear system is singular; refine the mesh")]
    Singular,
    #[error("jump residual {residual:e} at x = {x} exceeds {limit:e}")]
    Residual { residual: f64, x: f64, limit: f64 },
    #[error("Neumann iteration diverged (contraction estimate {0})")]
    NeumannDiverged(f64),
    #[error("integration window too small: tail {0:e}")]
    WindowTooSmall(f64),
    #[error("division guard: |Q| = {0:e} on the stencil")]
    QTooSmall(f64),
    #[error("mesh radius {radius} exceeds validity radius {limit}")]
    Radius { radius: f64, limit: f64 },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

pub fn mat_id() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_inv(a: &Mat2) -> Mat2 {
    let d = mat_det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn mat_det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn mat_norm(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

fn mat_scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

fn e21() -> Mat2 {
    [[ZERO, ZERO], [ONE, ZERO]]
}

/// e^{−iζσ₃}
fn expo(z: C64) -> Mat2 {
    [[(-I * z).exp(), ZERO], [ZERO, (I * z).exp()]]
}

fn u_plus() -> Mat2 {
    mat_id()
}

fn u_minus() -> Mat2 {
    [[ZERO, -ONE], [ONE, ZERO]]
}

/// Large-ζ normalisation B_± of Ψ̃ in the upper/lower half plane.
fn b_plus() -> Mat2 {
    [[ONE, ZERO], [ONE, ONE]]
}

fn b_minus() -> Mat2 {
    [[ONE, -ONE], [ONE, ZERO]]
}

/// Sectors between consecutive rays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    S0Plus,
    S1Plus,
    S2Plus,
    S0Minus,
    S1Minus,
    S2Minus,
}

impl Sector {
    pub fn of(z: C64) -> Option<Sector> {
        let a = z.arg();
        let c = PI / 8.0;
        if z.norm() == 0.0 || a == 0.0 || a.abs() == c || a.abs() == 7.0 * c || a.abs() == PI {
            return None;
        }
        let s = match a.abs() {
            x if x < c => 0,
            x if x < 7.0 * c => 1,
            _ => 2,
        };
        Some(match (a > 0.0, s) {
            (true, 0) => Sector::S0Plus,
            (true, 1) => Sector::S1Plus,
            (true, _) => Sector::S2Plus,
            (false, 0) => Sector::S0Minus,
            (false, 1) => Sector::S1Minus,
            (false, _) => Sector::S2Minus,
        })
    }

    fn upper(self) -> bool {
        matches!(self, Sector::S0Plus | Sector::S1Plus | Sector::S2Plus)
    }

    fn lens(self) -> bool {
        !matches!(self, Sector::S1Plus | Sector::S1Minus)
    }
}

/// The six rays; Σ₀, Σ_{±1} point outwards, Σ_{±2}, Σ₃ point to the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ray {
    R0,
    R1,
    R2,
    R3,
    Rm2,
    Rm1,
}

impl Ray {
    pub const ALL: [Ray; 6] = [Ray::R0, Ray::R1, Ray::R2, Ray::R3, Ray::Rm2, Ray::Rm1];

    pub fn angle(self) -> f64 {
        let c = PI / 8.0;
        match self {
            Ray::R0 => 0.0,
            Ray::R1 => c,
            Ray::R2 => 7.0 * c,
            Ray::R3 => PI,
            Ray::Rm2 => -7.0 * c,
            Ray::Rm1 => -c,
        }
    }

    /// Sector on the right of the orientation.
    pub fn minus_side(self) -> Sector {
        match self {
            Ray::R0 => Sector::S0Minus,
            Ray::R1 => Sector::S0Plus,
            Ray::R2 => Sector::S2Plus,
            Ray::R3 => Sector::S2Minus,
            Ray::Rm2 | Ray::Rm1 => Sector::S1Minus,
        }
    }

    pub fn point(self, r: f64) -> C64 {
        C64::from_polar(r, self.angle())
    }
}

/// Φ_sin in a given sector.
pub fn sine_parametrix_in(z: C64, sector: Sector) -> Mat2 {
    let u = if sector.upper() { u_plus() } else { u_minus() };
    let base = mat_mul(&expo(z), &u);
    match sector {
        Sector::S1Plus => mat_mul(&base, &[[ONE, ZERO], [ONE, ONE]]),
        Sector::S1Minus => mat_mul(&base, &[[ONE, ZERO], [-ONE, ONE]]),
        _ => base,
    }
}

/// Φ_sin(ζ) off the contour.
pub fn sine_parametrix(z: C64) -> Option<Mat2> {
    Sector::of(z).map(|s| sine_parametrix_in(z, s))
}

/// λ(ζ) = 1/(1 + e^{−s−uζ²}) for complex ζ.
pub fn lambda_c(z: C64, s: f64, u: f64) -> C64 {
    if s == f64::INFINITY {
        return ONE;
    }
    ONE / (ONE + (-(s + u * z * z)).exp())
}

/// Jump of L_s = Φ_∞Φ_sin^{−1} on a ray at distance r from 0.
pub fn jump_ls(ray: Ray, r: f64, s: f64, u: f64) -> Mat2 {
    let z = ray.point(r);
    let lam = lambda_c(z, s, u);
    let p = sine_parametrix_in(z, ray.minus_side());
    let pi = mat_inv(&p);
    let conj = |m: Mat2| mat_mul(&mat_mul(&p, &m), &pi);
    let d = ONE / lam - ONE;
    match ray {
        Ray::R0 | Ray::R3 => {
            let e11 = [[ONE, ZERO], [ZERO, ZERO]];
            let e22 = [[ZERO, ZERO], [ZERO, ONE]];
            let a = conj(e22);
            let b = mat_scale(&conj(e11), lam);
            let id = mat_id();
            let m = mat_sub(&a, &b);
            [[id[0][0] + d * m[0][0], d * m[0][1]], [d * m[1][0], id[1][1] + d * m[1][1]]]
        }
        _ => {
            let m = conj(e21());
            [[ONE + d * m[0][0], d * m[0][1]], [d * m[1][0], ONE + d * m[1][1]]]
        }
    }
}

/// Real-line sinc mesh x_k = kh, |x_k| ≤ R.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourMesh {
    pub h: f64,
    pub radius: f64,
    pub tol: f64,
    pub nodes: Vec<f64>,
}

impl ContourMesh {
    pub fn new(h: f64, radius: f64, tol: f64) -> Self {
        let k = (radius / h).ceil() as i64;
        ContourMesh { h, radius, tol, nodes: (-k..=k).map(|j| j as f64 * h).collect() }
    }

    /// Mesh resolving e^{−s−ux²} down to `tol` with step set by the nearest pole of λ.
    pub fn for_params(s: f64, u: f64, tol: f64) -> Self {
        if s == f64::INFINITY {
            return ContourMesh { h: 1.0, radius: 0.0, tol, nodes: Vec::new() };
        }
        let big_m: f64 = 4.0;
        let radius = (((big_m / tol).ln() + (-s).max(0.0)) / u).sqrt();
        let d = pole_distance(s, u);
        let h = (0.9 * PI * d / ((1.0 / tol).ln() + 4.0 * d)).min(0.25);
        ContourMesh::new(h, radius, tol)
    }

    /// Halved step, same radius.
    pub fn refined(&self) -> Self {
        ContourMesh::new(self.h / 2.0, self.radius, self.tol)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Distance from ℝ of the nearest zero of 1 + e^{−s−uζ²}.
pub fn pole_distance(s: f64, u: f64) -> f64 {
    C64::new(-s, PI).sqrt().im / u.sqrt()
}

fn sinc(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        (PI * y).sin() / (PI * y)
    }
}

/// C₋ applied to the sinc basis function centred at 0, at offset τ (in steps).
fn cauchy_minus(tau: f64) -> C64 {
    -0.5 * C64::from_polar(1.0, -PI * tau / 2.0) * sinc(tau / 2.0)
}

fn cauchy_plus(tau: f64) -> C64 {
    0.5 * C64::from_polar(1.0, PI * tau / 2.0) * sinc(tau / 2.0)
}

/// Cauchy transform of the sinc basis function off the real axis.
fn cauchy_off(tau: C64) -> C64 {
    if tau.norm() < 1e-8 {
        return if tau.im >= 0.0 { C64::new(0.5, 0.0) } else { C64::new(-0.5, 0.0) };
    }
    if tau.im > 0.0 {
        ((I * PI * tau).exp() - ONE) / (2.0 * PI * I * tau)
    } else {
        -(ONE - (-I * PI * tau).exp()) / (2.0 * PI * I * tau)
    }
}

/// Deformation exponent H on the real line.
#[derive(Clone, Debug)]
pub enum Exponent {
    /// H = s + uζ²
    Limit { s: f64, u: f64 },
    /// H = s + Σ c_k ζ^k n^{2−k} (finite-n profile)
    Series { s: f64, coeffs: Vec<f64>, n: f64 },
}

impl Exponent {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Exponent::Limit { s, u } => s + u * x * x,
            Exponent::Series { s, coeffs, n } => {
                let w = x / n;
                s + n * n * coeffs.iter().rev().fold(0.0, |acc, c| acc * w + c)
            }
        }
    }

    /// 1 − λ = 1/(1 + e^{H})
    pub fn one_minus_lambda(&self, x: f64) -> f64 {
        let h = self.eval(x);
        if h == f64::INFINITY {
            0.0
        } else {
            1.0 / (1.0 + h.exp())
        }
    }
}

/// J_X − I at x.
fn jump_dev(e: &Exponent, x: f64) -> Mat2 {
    let w = e.one_minus_lambda(x);
    let ph = C64::from_polar(1.0, 2.0 * x);
    [[C64::new(w, 0.0), -ph.conj() * w], [ph * w, C64::new(-w, 0.0)]]
}

/// Which linear solver produced the densities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Dense,
    Neumann,
}

/// Solution of the folded problem together with derived quantities.
#[derive(Clone, Debug)]
pub struct ModelSolution {
    pub mesh: ContourMesh,
    pub s: f64,
    pub big_t: f64,
    pub u: f64,
    pub exponent: Exponent,
    /// ν_k = X₊ − X₋ at the nodes
    pub nu: Vec<Mat2>,
    /// X₋ at the nodes
    pub x_minus: Vec<Mat2>,
    pub phi1: Mat2,
    pub p: f64,
    pub q: f64,
    pub p_ct: f64,
    pub q_osc: f64,
    pub solver: SolverKind,
}

/// Dense Cauchy matrix B_jk = C₋[S_k](x_j).
fn cauchy_matrix(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |j, k| cauchy_minus(j as f64 - k as f64))
}

fn assemble(mesh: &ContourMesh, e: &Exponent, solver: SolverKind) -> Result<Vec<Mat2>, RhpError> {
    let n = mesh.len();
    let b = cauchy_matrix(n);
    let dev: Vec<Mat2> = mesh.nodes.iter().map(|&x| jump_dev(e, x)).collect();
    // row-wise unknown v (1×2 per node): v_j − Σ_k B_jk v_k D_k = e_r
    let mut xm = vec![[[ZERO; 2]; 2]; n];
    match solver {
        SolverKind::Dense => {
            let m = DMatrix::from_fn(2 * n, 2 * n, |row, col| {
                let (j, c) = (row / 2, row % 2);
                let (k, cp) = (col / 2, col % 2);
                let delta = if row == col { ONE } else { ZERO };
                delta - b[(j, k)] * dev[k][cp][c]
            });
            let lu = m.lu();
            for r in 0..2 {
                let rhs = DVector::from_fn(2 * n, |row, _| if row % 2 == r { ONE } else { ZERO });
                let sol = lu.solve(&rhs).ok_or(RhpError::Singular)?;
                for j in 0..n {
                    xm[j][r] = [sol[2 * j], sol[2 * j + 1]];
                }
            }
        }
        SolverKind::Neumann => {
            let contraction = dev.iter().map(mat_norm).fold(0.0, f64::max) * 2.0;
            if contraction >= 1.0 {
                return Err(RhpError::NeumannDiverged(contraction));
            }
            for r in 0..2 {
                let mut v: Vec<[C64; 2]> = vec![if r == 0 { [ONE, ZERO] } else { [ZERO, ONE] }; n];
                for _ in 0..500 {
                    let vd: Vec<[C64; 2]> = (0..n)
                        .map(|k| {
                            let d = &dev[k];
                            [v[k][0] * d[0][0] + v[k][1] * d[1][0], v[k][0] * d[0][1] + v[k][1] * d[1][1]]
                        })
                        .collect();
                    let mut change = 0.0f64;
                    let mut next = Vec::with_capacity(n);
                    for j in 0..n {
                        let mut acc = if r == 0 { [ONE, ZERO] } else { [ZERO, ONE] };
                        for (k, w) in vd.iter().enumerate() {
                            let bjk = b[(j, k)];
                            acc[0] += bjk * w[0];
                            acc[1] += bjk * w[1];
                        }
                        change = change.max((acc[0] - v[j][0]).norm()).max((acc[1] - v[j][1]).norm());
                        next.push(acc);
                    }
                    v = next;
                    if change < 1e-17 {
                        break;
                    }
                }
                for j in 0..n {
                    xm[j][r] = v[j];
                }
            }
        }
    }
    Ok(xm)
}

/// Solves the limit problem H = s + ζ²/T² with the dense solver.
pub fn solve_model(mesh: &ContourMesh, s: f64, big_t: f64) -> Result<ModelSolution, RhpError> {
    solve_model_with(mesh, s, big_t, SolverKind::Dense)
}

pub fn solve_model_with(mesh: &ContourMesh, s: f64, big_t: f64, solver: SolverKind) -> Result<ModelSolution, RhpError> {
    if !(big_t > 0.0) || s.is_nan() || s == f64::NEG_INFINITY {
        return Err(RhpError::Invalid(format!("s = {s}, T = {big_t}")));
    }
    let u = 1.0 / (big_t * big_t);
    solve_exponent(mesh, Exponent::Limit { s, u }, s, big_t, solver)
}

fn solve_exponent(
    mesh: &ContourMesh,
    exponent: Exponent,
    s: f64,
    big_t: f64,
    solver: SolverKind,
) -> Result<ModelSolution, RhpError> {
    let u = 1.0 / (big_t * big_t);
    let (nu, x_minus) = if s == f64::INFINITY || mesh.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let xm = assemble(mesh, &exponent, solver)?;
        let nu = xm
            .iter()
            .zip(&mesh.nodes)
            .map(|(x, &t)| mat_mul(x, &jump_dev(&exponent, t)))
            .collect();
        (nu, xm)
    };
    let mut sum = [[ZERO; 2]; 2];
    for v in &nu {
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += v[i][j];
            }
        }
    }
    let phi1 = mat_scale(&sum, C64::new(-mesh.h, 0.0) / (2.0 * PI * I));
    let p_c = I * phi1[0][0];
    let q_c = -I * phi1[0][1];
    let sol = ModelSolution {
        mesh: mesh.clone(),
        s,
        big_t,
        u,
        exponent,
        nu,
        x_minus,
        phi1,
        p: p_c.re,
        q: q_c.re,
        p_ct: p_c.re / big_t,
        q_osc: q_c.re / big_t,
        solver,
    };
    if s != f64::INFINITY && !sol.mesh.is_empty() {
        let (res, x) = sol.jump_residual();
        let limit = 10.0 * sol.mesh.tol.max(1e-14);
        if res > limit {
            return Err(RhpError::Residual { residual: res, x, limit });
        }
    }
    Ok(sol)
}

/// p, q and their rescalings; imaginary residues are reported, not discarded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PqExtraction {
    pub p: f64,
    pub q: f64,
    pub p_ct: f64,
    pub q_osc: f64,
    pub imag_p: f64,
    pub imag_q: f64,
    /// |(Φ₁)₁₂ + (Φ₁)₂₁|
    pub antisymmetry: f64,
    /// imaginary parts and antisymmetry all below 1e-8
    pub real_ok: bool,
}

pub fn extract_pq(sol: &ModelSolution) -> PqExtraction {
    let p = I * sol.phi1[0][0];
    let q = -I * sol.phi1[0][1];
    let q2 = I * sol.phi1[1][0];
    let anti = (sol.phi1[0][1] + sol.phi1[1][0]).norm();
    let imag_p = p.im.abs();
    let imag_q = q.im.abs().max(q2.im.abs());
    PqExtraction {
        p: p.re,
        q: q.re,
        p_ct: p.re / sol.big_t,
        q_osc: q.re / sol.big_t,
        imag_p,
        imag_q,
        antisymmetry: anti,
        real_ok: imag_p < 1e-8 && imag_q < 1e-8 && anti < 1e-8,
    }
}

impl ModelSolution {
    fn tau(&self, x: f64, k: usize) -> f64 {
        (x - self.mesh.nodes[k]) / self.mesh.h
    }

    fn sum_with(&self, f: impl Fn(usize) -> C64) -> Mat2 {
        let mut acc = mat_id();
        for (k, v) in self.nu.iter().enumerate() {
            let w = f(k);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += v[i][j] * w;
                }
            }
        }
        acc
    }

    /// X₋(x) on the real line.
    pub fn x_minus_at(&self, x: f64) -> Mat2 {
        self.sum_with(|k| cauchy_minus(self.tau(x, k)))
    }

    /// X₊(x) on the real line.
    pub fn x_plus_at(&self, x: f64) -> Mat2 {
        self.sum_with(|k| cauchy_plus(self.tau(x, k)))
    }

    /// X(z) off the real line.
    pub fn x_at(&self, z: C64) -> Mat2 {
        let h = self.mesh.h;
        self.sum_with(|k| cauchy_off((z - self.mesh.nodes[k]) / h))
    }

    pub fn jump_dev_at(&self, x: f64) -> Mat2 {
        jump_dev(&self.exponent, x)
    }

    /// max over inter-node midpoints of |X₊ − X₋J|, with its location.
    pub fn jump_residual(&self) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for w in self.mesh.nodes.windows(2) {
            let x = 0.5 * (w[0] + w[1]);
            let xm = self.x_minus_at(x);
            let d = self.jump_dev_at(x);
            let xmj = mat_mul(&xm, &[[ONE + d[0][0], d[0][1]], [d[1][0], ONE + d[1][1]]]);
            let r = mat_norm(&mat_sub(&self.x_plus_at(x), &xmj));
            if r > worst.0 {
                worst = (r, x);
            }
        }
        worst
    }

    /// sup over nodes of |X₋ − I|.
    pub fn deviation(&self) -> f64 {
        self.x_minus.iter().map(|x| mat_norm(&mat_sub(x, &mat_id()))).fold(0.0, f64::max)
    }

    pub fn lambda(&self, z: C64) -> C64 {
        match &self.exponent {
            Exponent::Limit { s, u } => lambda_c(z, *s, *u),
            Exponent::Series { .. } => C64::new(1.0 - self.exponent.one_minus_lambda(z.re), 0.0),
        }
    }

    /// Φ_∞(z) off the contour.
    pub fn phi_inf(&self, z: C64) -> Option<Mat2> {
        let sector = Sector::of(z)?;
        let b = if sector.upper() { b_plus() } else { b_minus() };
        let mut m = mat_mul(&mat_mul(&self.x_at(z), &expo(z)), &b);
        if sector.lens() {
            let c = if sector.upper() { -ONE } else { ONE } / self.lambda(z);
            m = mat_mul(&m, &[[ONE, ZERO], [c, ONE]]);
        }
        Some(m)
    }

    /// L_s(z) = Φ_∞(z)Φ_sin(z)^{−1}.
    pub fn l_s(&self, z: C64) -> Option<Mat2> {
        Some(mat_mul(&self.phi_inf(z)?, &mat_inv(&sine_parametrix(z)?)))
    }

    /// First column of Ψ̃₋(x) = X₋(x)e^{−ixσ₃}B₋.
    pub fn psi_column(&self, x: f64) -> (C64, C64) {
        let xm = self.x_minus_at(x);
        let (em, ep) = (C64::from_polar(1.0, -x), C64::from_polar(1.0, x));
        (xm[0][0] * em + xm[0][1] * ep, xm[1][0] * em + xm[1][1] * ep)
    }

    /// Scalar Φ(ξ) = [Ψ₊(ξ)]₁₁ = [Ψ̃₋(−Tξ)]₁₁.
    pub fn phi_scalar(&self, xi: f64) -> C64 {
        self.psi_column(-self.big_t * xi).0
    }

    fn lambda_real(&self, x: f64) -> f64 {
        1.0 - self.exponent.one_minus_lambda(x)
    }

    fn kernel_pref(&self, zeta: f64, xi: f64) -> C64 {
        let l = (self.lambda_real(zeta) * self.lambda_real(xi)).sqrt();
        C64::new(l, 0.0) / (2.0 * PI * I * (zeta - xi))
    }

    /// K_∞ through the scalar Φ.
    pub fn k_scalar(&self, zeta: f64, xi: f64) -> C64 {
        let t = self.big_t;
        let num = self.phi_scalar(zeta / t) * self.phi_scalar(-xi / t)
            - self.phi_scalar(-zeta / t) * self.phi_scalar(xi / t);
        self.kernel_pref(zeta, xi) * num
    }

    /// K_∞ through the matrix sandwich [Ψ̃(ξ)^{−1}Ψ̃(ζ)]₂₁.
    pub fn k_matrix(&self, zeta: f64, xi: f64) -> C64 {
        let (az, cz) = self.psi_column(zeta);
        let (ax, cx) = self.psi_column(xi);
        self.kernel_pref(zeta, xi) * (ax * cz - cx * az)
    }
}

/// K_∞ value with the disagreement between the two routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub imag: f64,
    pub route_gap: f64,
}

/// K_∞(ζ, ξ); the diagonal is approached symmetrically.
pub fn k_infinity(sol: &ModelSolution, zeta: f64, xi: f64) -> KernelValue {
    let (z, x) = if (zeta - xi).abs() < 1e-5 {
        let m = 0.5 * (zeta + xi);
        (m + 1e-5, m - 1e-5)
    } else {
        (zeta, xi)
    };
    let a = sol.k_scalar(z, x);
    let b = sol.k_matrix(z, x);
    KernelValue { value: a.re, imag: a.im.abs(), route_gap: (a - b).norm() }
}

/// −(1/4πi)∫Φ(ξ)²λ′(Tξ)dξ by the trapezoid rule on a window where λ′ is negligible.
pub fn q_via_integral(sol: &ModelSolution) -> Result<f64, RhpError> {
    Ok((c_of_t(sol)? * -0.5).re)
}

/// c(T) = (1/2πi)∫Φ(ξ)²λ′(Tξ)dξ.
pub fn c_of_t(sol: &ModelSolution) -> Result<C64, RhpError> {
    if sol.s == f64::INFINITY {
        return Ok(ZERO);
    }
    let t = sol.big_t;
    let dl = |xi: f64| {
        // λ′ = H′·λ(1−λ) for H = s + u x²
        let x = t * xi;
        let w = sol.exponent.one_minus_lambda(x);
        2.0 * sol.u * x * w * (1.0 - w)
    };
    let window = ((1e17f64).ln() + (-sol.s).max(0.0)).sqrt() * 1.1;
    let step = 0.02;
    let k = (window / step).ceil() as i64;
    let f = |xi: f64| sol.phi_scalar(xi).powi(2) * dl(xi);
    let tail = f(k as f64 * step).norm().max(f(-(k as f64) * step).norm());
    let mut acc = ZERO;
    let mut peak = 0.0f64;
    for j in -k..=k {
        let v = f(j as f64 * step);
        peak = peak.max(v.norm());
        acc += v;
    }
    if tail > 1e-14 * peak.max(1e-300) && tail > 1e-300 {
        return Err(RhpError::WindowTooSmall(tail));
    }
    Ok(acc * step / (2.0 * PI * I))
}

/// Leading large-s behaviour −e^{−s−T²}/(2√π).
pub fn perturbative_q(s: f64, big_t: f64) -> f64 {
    -(-s - big_t * big_t).exp() / (2.0 * PI.sqrt())
}

fn solve_default(s: f64, big_t: f64, refine: u32) -> Result<ModelSolution, RhpError> {
    let mut mesh = ContourMesh::for_params(s, 1.0 / (big_t * big_t), 1e-16);
    for _ in 0..refine {
        mesh = mesh.refined();
    }
    solve_model(&mesh, s, big_t)
}

/// Residual of ∂_TΦ = iξΦ + c(T)Φ(−ξ) with a central difference of step δ.
pub fn ode_residual(s: f64, big_t: f64, delta: f64, refine: u32) -> Result<f64, RhpError> {
    let lo = solve_default(s, big_t - delta, refine)?;
    let mid = solve_default(s, big_t, refine)?;
    let hi = solve_default(s, big_t + delta, refine)?;
    let c = c_of_t(&mid)?;
    let mut worst = 0.0f64;
    for j in -20..=20 {
        let xi = j as f64 / 10.0;
        let d = (hi.phi_scalar(xi) - lo.phi_scalar(xi)) / (2.0 * delta);
        let r = d - I * xi * mid.phi_scalar(xi) - c * mid.phi_scalar(-xi);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Finite-difference residual of ∂_T(∂_T∂_sQ/(2Q)) = ∂_s(Q²) + 1 from a 3×5 grid
/// `grid[i][j] = Q(s + (i−1)δs, T + (j−2)δT)`.
pub fn pde_residual_from_grid(grid: &[[f64; 5]; 3], ds: f64, dt: f64) -> Result<f64, RhpError> {
    let min = grid.iter().flatten().map(|q| q.abs()).fold(f64::INFINITY, f64::min);
    if min < 1e-250 {
        return Err(RhpError::QTooSmall(min));
    }
    let f = |j: usize| {
        let mixed = (grid[2][j + 1] - grid[2][j - 1] - grid[0][j + 1] + grid[0][j - 1]) / (4.0 * ds * dt);
        mixed / (2.0 * grid[1][j])
    };
    let lhs = (f(3) - f(1)) / (2.0 * dt);
    let rhs = (grid[2][2].powi(2) - grid[0][2].powi(2)) / (2.0 * ds) + 1.0;
    Ok((lhs - rhs).abs())
}

/// Tabulates Q on the stencil around (s, T) and evaluates the PDE residual.
pub fn pde_residual(s: f64, big_t: f64, ds: f64, dt: f64) -> Result<f64, RhpError> {
    let mut grid = [[0.0; 5]; 3];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, q) in row.iter_mut().enumerate() {
            let si = s + (i as f64 - 1.0) * ds;
            let tj = big_t + (j as f64 - 2.0) * dt;
            *q = solve_default(si, tj, 0)?.q_osc;
        }
    }
    pde_residual_from_grid(&grid, ds, dt)
}

/// |∂_T p − p/T + q²/T| with a central difference.
pub fn dp_residual(s: f64, big_t: f64, delta: f64) -> Result<f64, RhpError> {
    dp_residual_with(s, big_t, delta, 1.0)
}

/// |∂_T p − p/T + c·q²/T|; the Lax pair of the folded problem gives c = 2.
pub fn dp_residual_with(s: f64, big_t: f64, delta: f64, c: f64) -> Result<f64, RhpError> {
    let lo = solve_default(s, big_t - delta, 0)?;
    let mid = solve_default(s, big_t, 0)?;
    let hi = solve_default(s, big_t + delta, 0)?;
    let d = (hi.p - lo.p) / (2.0 * delta);
    Ok((d - mid.p / big_t + c * mid.q * mid.q / big_t).abs())
}

/// Finite-n problem with H_n(ζ) = s + n²H₀(ζ/n), H₀ given by Taylor coefficients
/// (H₀(0) = H₀′(0) = 0) valid for |w| < `radius`.
pub fn solve_model_finite_n(
    mesh: &ContourMesh,
    s: f64,
    h0_coeffs: &[f64],
    radius: f64,
    n: f64,
) -> Result<ModelSolution, RhpError> {
    if h0_coeffs.len() < 3 || h0_coeffs[0] != 0.0 || h0_coeffs[1] != 0.0 || h0_coeffs[2] <= 0.0 {
        return Err(RhpError::Invalid("H₀ must start at u w² with u > 0".into()));
    }
    if mesh.radius > radius * n {
        return Err(RhpError::Radius { radius: mesh.radius, limit: radius * n });
    }
    let u = h0_coeffs[2];
    let big_t = 1.0 / u.sqrt();
    let e = Exponent::Series { s, coeffs: h0_coeffs.to_vec(), n };
    solve_exponent(mesh, e, s, big_t, SolverKind::Dense)
}

/// sup over nodes of |X_{n,−}X_{∞,−}^{−1} − I| (both on the same mesh).
pub fn finite_n_distance(fin: &ModelSolution, lim: &ModelSolution) -> f64 {
    fin.x_minus
        .iter()
        .zip(&lim.x_minus)
        .map(|(a, b)| mat_norm(&mat_sub(&mat_mul(a, &mat_inv(b)), &mat_id())))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_cauchy_weights() {
        assert!((cauchy_minus(0.0) - C64::new(-0.5, 0.0)).norm() < 1e-16);
        assert!((cauchy_plus(0.0) - C64::new(0.5, 0.0)).norm() < 1e-16);
        for m in 1..6 {
            let expect = if m % 2 == 1 { I / (PI * m as f64) } else { ZERO };
            assert!((cauchy_minus(m as f64) - expect).norm() < 1e-15);
            assert!((cauchy_plus(m as f64) - expect).norm() < 1e-15);
        }
        // Plemelj: C₊ − C₋ = sinc
        for tau in [0.3, -1.7, 2.25] {
            assert!((cauchy_plus(tau) - cauchy_minus(tau) - sinc(tau)).norm() < 1e-15);
            let up = cauchy_off(C64::new(tau, 1e-9));
            assert!((up - cauchy_plus(tau)).norm() < 1e-7);
        }
    }

    #[test]
    fn sectors_and_rays() {
        assert_eq!(Sector::of(C64::new(1.0, 0.1)), Some(Sector::S0Plus));
        assert_eq!(Sector::of(C64::new(0.0, 1.0)), Some(Sector::S1Plus));
        assert_eq!(Sector::of(C64::new(-1.0, 0.1)), Some(Sector::S2Plus));
        assert_eq!(Sector::of(C64::new(-1.0, -0.1)), Some(Sector::S2Minus));
        assert_eq!(Sector::of(C64::new(1.0, 0.0)), None);
        assert!((Ray::R2.point(1.0) - C64::from_polar(1.0, 7.0 * PI / 8.0)).norm() < 1e-15);
    }

    #[test]
    fn exponent_series_matches_limit_for_quadratic() {
        let e = Exponent::Series { s: 1.0, coeffs: vec![0.0, 0.0, 0.25], n: 7.0 };
        let l = Exponent::Limit { s: 1.0, u: 0.25 };
        for x in [-3.0, 0.0, 2.5] {
            assert!((e.eval(x) - l.eval(x)).abs() < 1e-14);
        }
        assert!(Exponent::Limit { s: 800.0, u: 1.0 }.one_minus_lambda(0.0) < 1e-300);
    }
}
