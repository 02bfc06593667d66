//! Exact complex-rational scalars and Laurent polynomials in `x`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Complex number with exact rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(BigRational::new(num.into(), den.into()), BigRational::zero())
    }

    /// Exact value of a pair of binary floating point numbers.
    pub fn from_f64(re: f64, im: f64) -> Option<Self> {
        Some(Self::new(BigRational::from_float(re)?, BigRational::from_float(im)?))
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::new(&self.re * k, &self.im * k)
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = &self.re * &self.re + &self.im * &self.im;
        Some(Self::new(&self.re / &d, -(&self.im / &d)))
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; go through a scaled quotient
        let n = r.numer().bits() as i64;
        let d = r.denom().bits() as i64;
        let shift = n - d;
        let scaled = if shift > 0 {
            r / BigRational::from_integer(BigInt::one() << (shift as usize))
        } else {
            r * BigRational::from_integer(BigInt::one() << ((-shift) as usize))
        };
        scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
    })
}

impl Add for &ExactComplex {
    type Output = ExactComplex;
    fn add(self, rhs: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &ExactComplex {
    type Output = ExactComplex;
    fn sub(self, rhs: &ExactComplex) -> ExactComplex {
        ExactComplex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &ExactComplex {
    type Output = ExactComplex;
    fn mul(self, rhs: &ExactComplex) -> ExactComplex {
        ExactComplex::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &ExactComplex {
    type Output = ExactComplex;
    fn neg(self) -> ExactComplex {
        ExactComplex::new(-&self.re, -&self.im)
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for ExactComplex {
    /// `3/2`, `-1/3*i` or `(3/2-1/3*i)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write_rational(f, &self.re),
            (true, false) => {
                write_rational(f, &self.im)?;
                write!(f, "*i")
            }
            (false, false) => {
                write!(f, "(")?;
                write_rational(f, &self.re)?;
                write!(f, "{}", if self.im.is_negative() { "-" } else { "+" })?;
                write_rational(f, &self.im.abs())?;
                write!(f, "*i)")
            }
        }
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.trim().parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl std::str::FromStr for ExactComplex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed coefficient {s:?}");
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let body = inner.strip_suffix("*i").ok_or_else(bad)?;
            // split at the sign separating the real and imaginary parts
            let pos = body
                .char_indices()
                .skip(1)
                .filter(|&(_, c)| c == '+' || c == '-')
                .map(|(i, _)| i)
                .last()
                .ok_or_else(bad)?;
            let re = parse_rational(&body[..pos]).ok_or_else(bad)?;
            let im = parse_rational(body[pos..].trim_start_matches('+')).ok_or_else(bad)?;
            Ok(Self::new(re, im))
        } else if let Some(im) = t.strip_suffix("*i") {
            Ok(Self::new(BigRational::zero(), parse_rational(im).ok_or_else(bad)?))
        } else {
            Ok(Self::new(parse_rational(t).ok_or_else(bad)?, BigRational::zero()))
        }
    }
}

/// Whether the polynomial `sum coeffs[k] x^k` has a repeated root, decided exactly
/// through `gcd(p, p')`.
pub fn has_repeated_factor(coeffs: &[ExactComplex]) -> bool {
    fn trim(mut p: Vec<ExactComplex>) -> Vec<ExactComplex> {
        while p.last().is_some_and(ExactComplex::is_zero) {
            p.pop();
        }
        p
    }
    fn rem(mut a: Vec<ExactComplex>, b: &[ExactComplex]) -> Vec<ExactComplex> {
        let lead_inv = b.last().and_then(ExactComplex::inv).expect("non-zero divisor");
        while a.len() >= b.len() {
            let q = a.last().expect("non-empty") * &lead_inv;
            let shift = a.len() - b.len();
            for (k, bk) in b.iter().enumerate() {
                a[shift + k] = &a[shift + k] - &(&q * bk);
            }
            a.pop();
            a = trim(a);
        }
        a
    }
    let p = trim(coeffs.to_vec());
    let dp: Vec<ExactComplex> = trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(&BigRational::from_integer(BigInt::from(k))))
            .collect(),
    );
    let (mut a, mut b) = (p, dp);
    while !b.is_empty() {
        let r = rem(a, &b);
        a = b;
        b = r;
    }
    a.len() > 1
}

/// Finite Laurent series `sum c_k x^k` with exact coefficients; zero terms are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, ExactComplex>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: ExactComplex) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: ExactComplex, exp: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, c);
        p
    }

    pub fn x_pow(exp: i64) -> Self {
        Self::monomial(ExactComplex::one(), exp)
    }

    /// `coeffs[k]` is the coefficient of `x^k`.
    pub fn from_coeffs(coeffs: &[ExactComplex]) -> Self {
        let mut p = Self::zero();
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(k as i64, c.clone());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &ExactComplex)> {
        self.terms.iter().map(|(&k, c)| (k, c))
    }

    pub fn coeff(&self, exp: i64) -> ExactComplex {
        self.terms.get(&exp).cloned().unwrap_or_else(ExactComplex::zero)
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add_term(&mut self, exp: i64, c: ExactComplex) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(ExactComplex::zero);
        *entry = &*entry + &c;
        if entry.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn scale(&self, k: &ExactComplex) -> Self {
        let mut out = Self::zero();
        for (&e, c) in &self.terms {
            out.add_term(e, c * k);
        }
        out
    }

    pub fn scale_rational(&self, k: &BigRational) -> Self {
        let mut out = Self::zero();
        for (&e, c) in &self.terms {
            out.add_term(e, c.scale(k));
        }
        out
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self { terms: self.terms.iter().map(|(&e, c)| (e + k, c.clone())).collect() }
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for (&e, c) in &self.terms {
            out.add_term(e - 1, c.scale(&BigRational::from_integer(e.into())));
        }
        out
    }

    pub fn has_negative_powers(&self) -> bool {
        self.min_exp().is_some_and(|e| e < 0)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&e, c) in &self.terms {
            acc += c.to_complex64() * x.powi(e as i32);
        }
        acc
    }

    /// Floating copy for repeated evaluation.
    pub fn to_float(&self) -> FloatLaurent {
        FloatLaurent {
            terms: self.terms.iter().map(|(&e, c)| (e, c.to_complex64())).collect(),
        }
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, -c);
        }
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (&e1, c1) in &self.terms {
            for (&e2, c2) in &rhs.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly { terms: self.terms.iter().map(|(&e, c)| (e, -c)).collect() }
    }
}

/// Laurent polynomial with `f64` complex coefficients, evaluated by Horner's rule.
#[derive(Clone, Debug)]
pub struct FloatLaurent {
    terms: Vec<(i64, Complex64)>,
}

impl FloatLaurent {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let (Some(&(lo, _)), Some(&(hi, _))) = (self.terms.first(), self.terms.last()) else {
            return Complex64::new(0.0, 0.0);
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let mut it = self.terms.iter().rev().peekable();
        for e in (lo..=hi).rev() {
            acc *= x;
            if let Some(&&(k, c)) = it.peek() {
                if k == e {
                    acc += c;
                    it.next();
                }
            }
        }
        acc * x.powi(lo as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: i64) -> ExactComplex {
        ExactComplex::from_integer(n)
    }

    #[test]
    fn display_and_parse_coefficients() {
        let cases = [
            ExactComplex::from_ratio(3, 2),
            ExactComplex::from_ratio(-7, 1),
            ExactComplex::new(BigRational::zero(), BigRational::new((-1).into(), 3.into())),
            ExactComplex::new(BigRational::new(3.into(), 2.into()), BigRational::new((-1).into(), 3.into())),
            ExactComplex::new(BigRational::new((-5).into(), 1.into()), BigRational::new(2.into(), 9.into())),
        ];
        let texts = ["3/2", "-7", "-1/3*i", "(3/2-1/3*i)", "(-5+2/9*i)"];
        for (v, t) in cases.iter().zip(texts) {
            assert_eq!(v.to_string(), t);
            assert_eq!(&t.parse::<ExactComplex>().unwrap(), v);
        }
        assert!("1/0".parse::<ExactComplex>().is_err());
        assert!("abc".parse::<ExactComplex>().is_err());
    }

    #[test]
    fn repeated_factor_detection() {
        let ints = |v: &[i64]| v.iter().map(|&n| c(n)).collect::<Vec<_>>();
        // x^7
        assert!(has_repeated_factor(&ints(&[0, 0, 0, 0, 0, 0, 0, 1])));
        // (x - 1)^2 (x + 2) = x^3 - 3x + 2
        assert!(has_repeated_factor(&ints(&[2, -3, 0, 1])));
        assert!(!has_repeated_factor(&ints(&[1, 0, 0, 0, 0, 0, 0, 1])));
        assert!(!has_repeated_factor(&ints(&[0, -36, 0, 49, 0, -14, 0, 1])));
    }

    #[test]
    fn zero_terms_are_dropped() {
        let mut p = LaurentPoly::x_pow(3);
        p.add_term(3, c(-1));
        assert!(p.is_zero());
        assert_eq!(p.min_exp(), None);
    }

    #[test]
    fn derivative_of_laurent_terms() {
        // d/dx (x^-2 + 5 x^3) = -2 x^-3 + 15 x^2
        let p = &LaurentPoly::x_pow(-2) + &LaurentPoly::monomial(c(5), 3);
        let d = p.derivative();
        assert_eq!(d.coeff(-3), c(-2));
        assert_eq!(d.coeff(2), c(15));
        assert_eq!(d.terms().count(), 2);
    }

    #[test]
    fn float_horner_matches_direct() {
        let p = &(&LaurentPoly::x_pow(-2) + &LaurentPoly::monomial(c(5), 3))
            + &LaurentPoly::monomial(ExactComplex::from_ratio(1, 3), 0);
        let x = Complex64::new(0.7, -1.3);
        let a = p.eval(x);
        let b = p.to_float().eval(x);
        assert!((a - b).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 1999usize);
        let v = ExactComplex::new(big, BigRational::zero()).to_complex64();
        assert!((v.re - 6.0).abs() < 1e-12);
    }
}
