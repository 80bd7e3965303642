//! Polynomials and truncated power series over `XReal`.

use super::xreal::{Precision, XReal};

/// Polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub c: Vec<XReal>,
}

impl Poly {
    pub fn new(mut c: Vec<XReal>) -> Self {
        while c.len() > 1 && c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn from_f64(c: &[f64], p: Precision) -> Self {
        Poly::new(c.iter().map(|&x| XReal::from_f64(x, p)).collect())
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn leading(&self) -> &XReal {
        self.c.last().expect("non-empty polynomial")
    }

    pub fn precision(&self) -> Precision {
        self.c[0].precision()
    }

    pub fn coeff(&self, k: usize) -> XReal {
        self.c.get(k).cloned().unwrap_or_else(|| XReal::zero(self.precision()))
    }

    pub fn eval(&self, x: &XReal) -> XReal {
        let mut acc = XReal::zero(self.precision().max(x.precision()));
        for a in self.c.iter().rev() {
            acc = &(&acc * x) + a;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, a| acc * x + a.to_f64())
    }

    pub fn deriv(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::new(vec![XReal::zero(self.precision())]);
        }
        Poly::new(self.c.iter().enumerate().skip(1).map(|(k, a)| a * (k as f64)).collect())
    }

    pub fn scale(&self, s: &XReal) -> Poly {
        Poly::new(self.c.iter().map(|a| a * s).collect())
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let p = self.precision();
        let mut c = vec![XReal::zero(p); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += &(a * b);
            }
        }
        Poly::new(c)
    }

    /// x·P(x)
    pub fn shift_up(&self) -> Poly {
        let mut c = vec![XReal::zero(self.precision())];
        c.extend(self.c.iter().cloned());
        Poly::new(c)
    }

    /// Coefficients of P(c + r·y) in powers of y.
    pub fn affine(&self, c0: &XReal, r: &XReal) -> Poly {
        let p = self.precision();
        let lin = Poly::new(vec![c0.clone(), r.clone()]);
        let mut acc = Poly::new(vec![XReal::zero(p)]);
        for a in self.c.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::new(vec![a.clone()]));
        }
        acc
    }

    pub fn with_precision(&self, p: Precision) -> Poly {
        Poly::new(self.c.iter().map(|a| a.with_precision(p)).collect())
    }

    pub fn is_even(&self) -> bool {
        self.c.iter().skip(1).step_by(2).all(|a| a.is_zero())
    }
}

/// Power series truncated after `w^order`.
#[derive(Clone, Debug)]
pub struct Series {
    pub c: Vec<XReal>,
}

impl Series {
    pub fn new(c: Vec<XReal>, order: usize) -> Self {
        assert!(!c.is_empty());
        let p = c[0].precision();
        let mut c = c;
        c.resize(order + 1, XReal::zero(p));
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn precision(&self) -> Precision {
        self.c[0].precision()
    }

    pub fn from_poly(p: &Poly, order: usize) -> Self {
        let mut c: Vec<XReal> = p.c.iter().take(order + 1).cloned().collect();
        c.resize(order + 1, XReal::zero(p.precision()));
        Series { c }
    }

    pub fn eval(&self, x: &XReal) -> XReal {
        let mut acc = XReal::zero(self.precision());
        for a in self.c.iter().rev() {
            acc = &(&acc * x) + a;
        }
        acc
    }

    pub fn add(&self, o: &Series) -> Series {
        Series { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: &XReal) -> Series {
        Series { c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &Series) -> Series {
        let n = self.order().min(o.order());
        let p = self.precision();
        let mut c = vec![XReal::zero(p); n + 1];
        for i in 0..=n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                c[i + j] += &(&self.c[i] * &o.c[j]);
            }
        }
        Series { c }
    }

    pub fn deriv(&self) -> Series {
        let n = self.order();
        let p = self.precision();
        let mut c: Vec<XReal> = (1..=n).map(|k| &self.c[k] * (k as f64)).collect();
        c.push(XReal::zero(p));
        Series { c }
    }

    /// Antiderivative vanishing at 0 (top coefficient dropped).
    pub fn integrate(&self) -> Series {
        let n = self.order();
        let p = self.precision();
        let mut c = vec![XReal::zero(p)];
        for k in 0..n {
            c.push(&self.c[k] / ((k + 1) as f64));
        }
        Series { c }
    }

    /// A(w)^alpha for A(0) > 0.
    pub fn pow(&self, alpha: &XReal) -> Series {
        let n = self.order();
        let a0 = &self.c[0];
        let mut b = vec![a0.powf(alpha)];
        for m in 1..=n {
            let mut s = XReal::zero(self.precision());
            for k in 1..=m {
                let coef = alpha * (k as f64) - ((m - k) as f64);
                s += &(&(&coef * &self.c[k]) * &b[m - k]);
            }
            b.push(s / &(a0 * (m as f64)));
        }
        Series { c: b }
    }

    pub fn sqrt(&self) -> Series {
        self.pow(&XReal::ratio(1, 2, self.precision()))
    }

    pub fn recip(&self) -> Series {
        self.pow(&XReal::from_f64(-1.0, self.precision()))
    }

    /// self ∘ g for g(0) = 0.
    pub fn compose(&self, g: &Series) -> Series {
        assert!(g.c[0].is_zero(), "inner series must vanish at 0");
        let n = self.order().min(g.order());
        let p = self.precision();
        let mut acc = Series::new(vec![XReal::zero(p)], n);
        for a in self.c.iter().take(n + 1).rev() {
            acc = acc.mul(g);
            acc.c[0] += a;
        }
        acc
    }

    /// Compositional inverse h with self(h(w)) = w; needs c0 = 0, c1 ≠ 0.
    pub fn revert(&self) -> Option<Series> {
        let n = self.order();
        if !self.c[0].is_zero() || self.c[1].is_zero() {
            return None;
        }
        let p = self.precision();
        let g1 = self.c[1].clone();
        let mut h = vec![XReal::zero(p); n + 1];
        h[1] = g1.recip();
        for k in 2..=n {
            let hs = Series { c: h.clone() };
            let comp = self.compose(&hs);
            h[k] = -(&comp.c[k] / &g1);
        }
        Some(Series { c: h })
    }
}
