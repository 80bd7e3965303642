//! Extended-precision reals backed by `astro-float`.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

const RM: RoundingMode = RoundingMode::ToEven;
const WORD: usize = 64;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Working precision in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_DIGITS: u32 = 50;
    pub const DEFAULT_DIGITS: u32 = 60;

    /// Clamps to the minimum of 50 digits.
    pub fn digits(d: u32) -> Self {
        Precision(d.max(Self::MIN_DIGITS))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn plus(self, extra: u32) -> Self {
        Precision(self.0 + extra)
    }

    /// Mantissa bits: the decimal request plus one guard word.
    pub fn bits(self) -> usize {
        let b = (self.0 as f64 * std::f64::consts::LOG2_10).ceil() as usize + WORD;
        b.div_ceil(WORD) * WORD
    }

    /// 10^{-d+k}, handy for tolerances.
    pub fn eps_with_slack(self, k: i32) -> f64 {
        10f64.powi(-(self.0 as i32) + k)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(Self::DEFAULT_DIGITS)
    }
}

/// A real number carried at a fixed binary precision.
#[derive(Clone)]
pub struct XReal {
    v: BigFloat,
    bits: usize,
}

impl XReal {
    fn wrap(v: BigFloat, bits: usize) -> Self {
        XReal { v, bits }
    }

    pub fn zero(p: Precision) -> Self {
        Self::from_f64(0.0, p)
    }

    pub fn one(p: Precision) -> Self {
        Self::from_f64(1.0, p)
    }

    pub fn from_f64(x: f64, p: Precision) -> Self {
        let bits = p.bits();
        Self::wrap(BigFloat::from_f64(x, bits), bits)
    }

    pub fn from_i64(x: i64, p: Precision) -> Self {
        let bits = p.bits();
        Self::wrap(BigFloat::from_i64(x, bits), bits)
    }

    /// Exact ratio `num/den` rounded once.
    pub fn ratio(num: i64, den: i64, p: Precision) -> Self {
        Self::from_i64(num, p) / Self::from_i64(den, p)
    }

    /// Parses a decimal literal such as `-1.25e-3`, `inf` or `-inf`.
    pub fn parse(s: &str, p: Precision) -> Option<Self> {
        let bits = p.bits();
        let t = s.trim();
        match t {
            "inf" | "+inf" | "infinity" => return Some(Self::wrap(BigFloat::from_f64(f64::INFINITY, bits), bits)),
            "-inf" | "-infinity" => return Some(Self::wrap(BigFloat::from_f64(f64::NEG_INFINITY, bits), bits)),
            _ => {}
        }
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) {
            return None;
        }
        let v = with_consts(|cc| BigFloat::parse(t, Radix::Dec, bits, RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Self::wrap(v, bits))
        }
    }

    pub fn pi(p: Precision) -> Self {
        let bits = p.bits();
        Self::wrap(with_consts(|cc| cc.pi(bits, RM)), bits)
    }

    pub fn ln2(p: Precision) -> Self {
        let bits = p.bits();
        Self::wrap(with_consts(|cc| cc.ln_2(bits, RM)), bits)
    }

    pub fn ln10(p: Precision) -> Self {
        let bits = p.bits();
        Self::wrap(with_consts(|cc| cc.ln_10(bits, RM)), bits)
    }

    /// Working precision in decimal digits (the largest request that maps to these bits).
    pub fn precision(&self) -> Precision {
        Precision((((self.bits - WORD) as f64) / std::f64::consts::LOG2_10).floor() as u32)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Same value at another precision.
    pub fn with_precision(&self, p: Precision) -> Self {
        let bits = p.bits();
        let mut v = self.v.clone();
        if v.is_nan() || v.is_inf() {
            return Self::wrap(v, bits);
        }
        let _ = v.set_precision(bits, RM);
        Self::wrap(v, bits)
    }

    /// Value of the same precision as `self`.
    pub fn lift(&self, x: f64) -> Self {
        Self::wrap(BigFloat::from_f64(x, self.bits), self.bits)
    }

    pub fn lift_i(&self, x: i64) -> Self {
        Self::wrap(BigFloat::from_i64(x, self.bits), self.bits)
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !(self.v.is_nan() || self.v.is_inf())
    }

    pub fn is_nan(&self) -> bool {
        self.v.is_nan()
    }

    pub fn is_inf_pos(&self) -> bool {
        self.v.is_inf_pos()
    }

    pub fn is_inf_neg(&self) -> bool {
        self.v.is_inf_neg()
    }

    pub fn is_positive(&self) -> bool {
        !self.v.is_zero() && self.v.is_positive() && !self.v.is_nan()
    }

    pub fn is_negative(&self) -> bool {
        !self.v.is_zero() && self.v.is_negative() && !self.v.is_nan()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.v.abs(), self.bits)
    }

    pub fn sqr(&self) -> Self {
        self * self
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.v.sqrt(self.bits, RM), self.bits)
    }

    pub fn exp(&self) -> Self {
        if self.v.is_inf_neg() {
            return self.lift(0.0);
        }
        Self::wrap(with_consts(|cc| self.v.exp(self.bits, RM, cc)), self.bits)
    }

    pub fn ln(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.ln(self.bits, RM, cc)), self.bits)
    }

    /// log(1+x), accurate for small |x|.
    pub fn ln_1p(&self) -> Self {
        let tiny = self.abs().to_f64();
        if tiny < 1e-3 && tiny > 0.0 {
            // alternating series: x - x^2/2 + x^3/3 - ...
            let eps = 2f64.powi(-(self.bits as i32));
            let mut pow = self.clone();
            let mut acc = self.clone();
            let mut k = 1i64;
            loop {
                k += 1;
                pow = &pow * self;
                let term = &pow / &self.lift_i(k);
                if k % 2 == 0 {
                    acc -= &term;
                } else {
                    acc += &term;
                }
                if term.abs().to_f64() <= eps * tiny {
                    break;
                }
            }
            acc
        } else {
            (self + &self.lift(1.0)).ln()
        }
    }

    pub fn sin(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.sin(self.bits, RM, cc)), self.bits)
    }

    pub fn cos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.cos(self.bits, RM, cc)), self.bits)
    }

    pub fn acos(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.acos(self.bits, RM, cc)), self.bits)
    }

    pub fn atan(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.atan(self.bits, RM, cc)), self.bits)
    }

    pub fn cosh(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.cosh(self.bits, RM, cc)), self.bits)
    }

    pub fn acosh(&self) -> Self {
        Self::wrap(with_consts(|cc| self.v.acosh(self.bits, RM, cc)), self.bits)
    }

    pub fn powi(&self, n: usize) -> Self {
        Self::wrap(self.v.powi(n, self.bits, RM), self.bits)
    }

    /// self^y for self > 0.
    pub fn powf(&self, y: &XReal) -> Self {
        (&self.ln() * y).exp()
    }

    pub fn recip(&self) -> Self {
        Self::wrap(self.v.reciprocal(self.bits, RM), self.bits)
    }

    pub fn max(&self, o: &XReal) -> Self {
        if self >= o {
            self.clone()
        } else {
            o.clone()
        }
    }

    pub fn min(&self, o: &XReal) -> Self {
        if self <= o {
            self.clone()
        } else {
            o.clone()
        }
    }

    /// Nearest double (saturating to ±inf, NaN preserved).
    pub fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.v.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if self.v.is_zero() {
            return 0.0;
        }
        let Some((words, _n, sign, e, _)) = self.v.as_raw_parts() else {
            return f64::NAN;
        };
        let top = words.len();
        let hi = words[top - 1] as f64;
        let lo = if top >= 2 { words[top - 2] as f64 } else { 0.0 };
        let frac = (hi + lo * 2f64.powi(-64)) * 2f64.powi(-64);
        let mut v = ldexp(frac, e);
        if sign == Sign::Neg {
            v = -v;
        }
        v
    }

    /// Decimal string with `sig` significant digits, e.g. `-1.2345000000e-3`.
    pub fn to_sci(&self, sig: usize) -> String {
        if self.v.is_nan() {
            return "nan".into();
        }
        if self.v.is_inf_pos() {
            return "inf".into();
        }
        if self.v.is_inf_neg() {
            return "-inf".into();
        }
        if self.v.is_zero() {
            return format!("{:.*}e0", sig.saturating_sub(1), 0.0);
        }
        let s = with_consts(|cc| self.v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "nan".into());
        round_decimal(&s, sig)
    }

    pub fn total_cmp(&self, o: &XReal) -> Ordering {
        match self.v.cmp(&o.v) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            Some(_) => Ordering::Greater,
            None => Ordering::Equal,
        }
    }

    fn bin(&self, o: &XReal) -> usize {
        self.bits.max(o.bits)
    }
}

fn ldexp(x: f64, e: i32) -> f64 {
    let mut v = x;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e)
}

/// Rounds astro-float's decimal output (`d.ddd…e±x`) to `sig` significant digits.
fn round_decimal(s: &str, sig: usize) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let (ip, fp) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let mut digits: Vec<u8> = ip.bytes().chain(fp.bytes()).map(|b| b - b'0').collect();
    let mut exp10 = exp + ip.len() as i64 - 1;
    let lead = digits.iter().position(|&d| d != 0).unwrap_or(digits.len());
    if lead == digits.len() {
        return format!("{}0e0", if neg { "-" } else { "" });
    }
    digits.drain(..lead);
    exp10 -= lead as i64;
    let sig = sig.max(1);
    if digits.len() > sig {
        let round_up = digits[sig] >= 5;
        digits.truncate(sig);
        if round_up {
            let mut i = sig;
            loop {
                if i == 0 {
                    digits.insert(0, 1);
                    digits.truncate(sig);
                    exp10 += 1;
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
    }
    while digits.len() < sig {
        digits.push(0);
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + digits[0]) as char);
    if sig > 1 {
        out.push('.');
        for d in &digits[1..] {
            out.push((b'0' + d) as char);
        }
    }
    out.push_str(&format!("e{exp10}"));
    out
}

impl fmt::Debug for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci(25))
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_sci(sig))
    }
}

impl PartialEq for XReal {
    fn eq(&self, o: &Self) -> bool {
        matches!(self.v.cmp(&o.v), Some(0))
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.v.cmp(&o.v).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $op:ident) => {
        impl $tr<&XReal> for &XReal {
            type Output = XReal;
            fn $m(self, o: &XReal) -> XReal {
                let b = self.bin(o);
                XReal::wrap(self.v.$op(&o.v, b, RM), b)
            }
        }
        impl $tr<XReal> for XReal {
            type Output = XReal;
            fn $m(self, o: XReal) -> XReal {
                (&self).$m(&o)
            }
        }
        impl $tr<&XReal> for XReal {
            type Output = XReal;
            fn $m(self, o: &XReal) -> XReal {
                (&self).$m(o)
            }
        }
        impl $tr<XReal> for &XReal {
            type Output = XReal;
            fn $m(self, o: XReal) -> XReal {
                self.$m(&o)
            }
        }
        impl $tr<f64> for &XReal {
            type Output = XReal;
            fn $m(self, o: f64) -> XReal {
                self.$m(&self.lift(o))
            }
        }
        impl $tr<f64> for XReal {
            type Output = XReal;
            fn $m(self, o: f64) -> XReal {
                (&self).$m(&self.lift(o))
            }
        }
        impl $atr<&XReal> for XReal {
            fn $am(&mut self, o: &XReal) {
                *self = (&*self).$m(o);
            }
        }
        impl $atr<XReal> for XReal {
            fn $am(&mut self, o: XReal) {
                *self = (&*self).$m(&o);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, add);
binop!(Sub, sub, SubAssign, sub_assign, sub);
binop!(Mul, mul, MulAssign, mul_assign, mul);
binop!(Div, div, DivAssign, div_assign, div);

impl Neg for &XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal::wrap(BigFloat::neg(&self.v), self.bits)
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        -&self
    }
}

/// Sum with the precision taken from `p`.
pub fn xsum<'a>(it: impl IntoIterator<Item = &'a XReal>, p: Precision) -> XReal {
    it.into_iter().fold(XReal::zero(p), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_f64() {
        let p = Precision::default();
        for &x in &[1.0, -2.5, 1e-300, 3.141592653589793, -7.25e200, 0.1] {
            assert_eq!(XReal::from_f64(x, p).to_f64(), x);
        }
    }

    #[test]
    fn pi_digits() {
        let p = Precision::digits(60);
        let s = XReal::pi(p).to_sci(50);
        assert!(s.starts_with("3.141592653589793238462643383279502884197169399375"), "{s}");
    }

    #[test]
    fn parse_and_format() {
        let p = Precision::default();
        let x = XReal::parse("-1.25e-3", p).unwrap();
        assert_eq!(x.to_f64(), -1.25e-3);
        assert_eq!(x.to_sci(4), "-1.250e-3");
        assert!(XReal::parse("abc", p).is_none());
        assert!(XReal::parse("inf", p).unwrap().is_inf_pos());
        let third = XReal::ratio(1, 3, p);
        assert_eq!(third.to_sci(5), "3.3333e-1");
        assert_eq!(XReal::from_f64(9.99996, p).to_sci(5), "1.0000e1");
    }

    #[test]
    fn transcendental_identities() {
        let p = Precision::digits(80);
        let x = XReal::ratio(7, 10, p);
        let back = x.exp().ln();
        assert!((&back - &x).abs().to_f64() < 1e-75);
        let c = x.cos();
        let s = x.sin();
        assert!((c.sqr() + s.sqr() - 1.0).abs().to_f64() < 1e-75);
        assert!((x.cos().acos() - &x).abs().to_f64() < 1e-75);
        let tiny = XReal::from_f64(1e-30, p);
        let l = tiny.ln_1p();
        assert!(((&l - &tiny) / &tiny + 5e-31).abs().to_f64() < 1e-45);
    }

    #[test]
    fn precision_bits_monotone() {
        assert!(Precision::digits(60).bits() >= 200);
        assert!(Precision::digits(80).bits() > Precision::digits(60).bits());
        assert_eq!(Precision::digits(10).get(), 50);
    }

    #[test]
    fn huge_exponent_range() {
        let p = Precision::default();
        let big = XReal::from_f64(-3000.0, p).exp();
        assert!(big.is_positive());
        assert_eq!(big.to_f64(), 0.0);
        let back = big.ln();
        assert!((back + 3000.0).abs().to_f64() < 1e-50);
    }
}
