//! The curve `y^2 = f(x)` with `f` monic of degree seven, its points, and the
//! exact coordinate ring `C[x, x^-1][y] / (y^2 - f)` together with the derivations
//! `d/du_j` along the curve.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::exact::{has_repeated_factor, ExactComplex, LaurentPoly};
use crate::roots::polynomial_roots;
use crate::{Error, Result};

pub const DEGREE: usize = 7;

#[derive(Clone, Debug)]
pub struct Curve {
    lambda: [Complex64; 8],
    exact: Vec<ExactComplex>,
    f: LaurentPoly,
    roots: Vec<Complex64>,
}

impl Curve {
    /// Build the curve from `lambda_0 .. lambda_6`; `lambda_7 = 1`.
    pub fn new(lambda: [Complex64; 7], config: &Config) -> Result<Self> {
        let exact = lambda
            .iter()
            .map(|l| {
                ExactComplex::from_f64(l.re, l.im)
                    .ok_or_else(|| Error::InvalidArgument(format!("non-finite coefficient {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_exact(exact.try_into().expect("seven coefficients"), config)
    }

    /// Build the curve from exact `lambda_0 .. lambda_6`.
    pub fn from_exact(lambda: [ExactComplex; 7], config: &Config) -> Result<Self> {
        let mut exact = lambda.to_vec();
        exact.push(ExactComplex::one());
        let mut floats = [Complex64::new(0.0, 0.0); 8];
        for (dst, src) in floats.iter_mut().zip(&exact) {
            *dst = src.to_complex64();
        }
        if has_repeated_factor(&exact) {
            return Err(Error::RepeatedRoots { distance: 0.0, tolerance: config.root_sep_tol });
        }
        let roots = polynomial_roots(&floats)?;
        let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut min_dist = f64::INFINITY;
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                min_dist = min_dist.min((roots[i] - roots[j]).norm());
            }
        }
        // a root cluster at the origin has scale ~ 0; compare against 1 in that case
        let tolerance = config.root_sep_tol * scale.max(1.0);
        if min_dist <= tolerance {
            return Err(Error::RepeatedRoots { distance: min_dist, tolerance });
        }
        let f = LaurentPoly::from_coeffs(&exact);
        Ok(Self { lambda: floats, exact, f, roots })
    }

    pub fn from_integers(lambda: [i64; 7], config: &Config) -> Result<Self> {
        Self::from_exact(lambda.map(ExactComplex::from_integer), config)
    }

    /// `f(x) = x^7 + 1`.
    pub fn x7_plus_1() -> Self {
        Self::from_integers([1, 0, 0, 0, 0, 0, 0], &Config::default()).expect("valid curve")
    }

    /// `f(x) = x (x^2 - 1)(x^2 - 4)(x^2 - 9)`.
    pub fn real_seven_roots() -> Self {
        Self::from_integers([0, -36, 0, 49, 0, -14, 0], &Config::default()).expect("valid curve")
    }

    /// `lambda_0 .. lambda_7`.
    pub fn lambda(&self) -> &[Complex64; 8] {
        &self.lambda
    }

    pub fn exact_lambda(&self) -> &[ExactComplex] {
        &self.exact
    }

    pub fn f_poly(&self) -> &LaurentPoly {
        &self.f
    }

    /// Roots of `f` in the order the root finder produced them.
    pub fn raw_roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn max_root_modulus(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn f(&self, x: Complex64) -> Complex64 {
        self.lambda.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn f_prime(&self, x: Complex64) -> Complex64 {
        self.lambda
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| acc * x + c * k as f64)
    }

    /// Hash of the exact coefficients, used to key cached period data.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for c in &self.exact {
            h.update(c.to_string().as_bytes());
            h.update(b";");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Radius in the local parameter `t = x^{-1/2}` inside which the expansion at
    /// infinity converges.
    pub fn infinity_radius(&self) -> f64 {
        1.0 / self.max_root_modulus().max(1e-300).sqrt()
    }

    pub fn is_on_curve(&self, p: &CurvePoint, tol: f64) -> bool {
        p.at_infinity || self.on_curve_residual(p.x, p.y) <= tol
    }

    fn on_curve_residual(&self, x: Complex64, y: Complex64) -> f64 {
        let fx = self.f(x);
        (y * y - fx).norm() / (1.0 + fx.norm())
    }

    pub fn point(&self, x: Complex64, y: Complex64, config: &Config) -> Result<CurvePoint> {
        let residual = self.on_curve_residual(x, y);
        if residual > config.on_curve_tol {
            return Err(Error::NotOnCurve { residual });
        }
        Ok(CurvePoint { x, y, at_infinity: false })
    }

    /// The point over `x` on the sheet `sheet` (`+1` takes the principal square root).
    pub fn point_over(&self, x: Complex64, sheet: i8) -> CurvePoint {
        let y = self.f(x).sqrt();
        CurvePoint { x, y: if sheet < 0 { -y } else { y }, at_infinity: false }
    }

    /// The point with local parameter `t` at infinity: `x = t^-2` and
    /// `y = sign * t^-7 * sqrt(t^14 f(t^-2))`, the square root continued from `1` at `t = 0`.
    pub fn point_near_infinity(&self, t: Complex64, sign: i8) -> Result<CurvePoint> {
        let radius = self.infinity_radius();
        if t.norm() == 0.0 || t.norm() >= 0.9 * radius {
            return Err(Error::TooFarFromInfinity { t: t.norm(), radius: 0.9 * radius });
        }
        let x = 1.0 / (t * t);
        let y = f64::from(sign.signum()) * self.infinity_root_factor(t) / t.powi(7);
        Ok(CurvePoint { x, y, at_infinity: false })
    }

    /// `sqrt(t^14 f(t^-2)) = prod_k sqrt(1 - e_k t^2)`, each factor on its principal branch.
    pub fn infinity_root_factor(&self, t: Complex64) -> Complex64 {
        let t2 = t * t;
        self.roots.iter().map(|&e| (1.0 - e * t2).sqrt()).product()
    }
}

/// Parsed form of the curve file `{"lambda": [[re, im] x 7]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFile {
    pub lambda: Vec<[f64; 2]>,
}

impl CurveFile {
    pub fn from_curve(curve: &Curve) -> Self {
        Self { lambda: curve.lambda()[..7].iter().map(|c| [c.re, c.im]).collect() }
    }

    pub fn to_curve(&self, config: &Config) -> Result<Curve> {
        if self.lambda.len() != 7 {
            return Err(Error::InvalidArgument(format!(
                "curve file needs 7 coefficients lambda_0..lambda_6, found {}",
                self.lambda.len()
            )));
        }
        let mut l = [Complex64::new(0.0, 0.0); 7];
        for (dst, src) in l.iter_mut().zip(&self.lambda) {
            *dst = Complex64::new(src[0], src[1]);
        }
        Curve::new(l, config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: Complex64,
    pub y: Complex64,
    pub at_infinity: bool,
}

impl CurvePoint {
    pub const INFINITY: CurvePoint = CurvePoint {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
        at_infinity: true,
    };

    /// Image under the hyperelliptic involution.
    pub fn conjugate(&self) -> CurvePoint {
        CurvePoint { y: -self.y, ..*self }
    }
}

/// `x^a y^b` with `b` in `{0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub x_exp: u32,
    pub y_exp: u8,
}

impl Monomial {
    pub fn new(x_exp: u32, y_exp: u8) -> Self {
        assert!(y_exp <= 1, "y exponent must be 0 or 1");
        Self { x_exp, y_exp }
    }

    pub fn pole_order(&self) -> u32 {
        pole_order(*self)
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let v = x.powu(self.x_exp);
        if self.y_exp == 1 {
            v * y
        } else {
            v
        }
    }

    pub fn to_function(&self) -> CurveFunction {
        let p = LaurentPoly::x_pow(i64::from(self.x_exp));
        if self.y_exp == 1 {
            CurveFunction::new(LaurentPoly::zero(), p)
        } else {
            CurveFunction::new(p, LaurentPoly::zero())
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x_exp, self.y_exp) {
            (0, 0) => write!(f, "1"),
            (0, _) => write!(f, "y"),
            (1, 0) => write!(f, "x"),
            (1, _) => write!(f, "yx"),
            (a, 0) => write!(f, "x^{a}"),
            (a, _) => write!(f, "yx^{a}"),
        }
    }
}

/// Pole order of `x^a y^b` at infinity.
pub fn pole_order(m: Monomial) -> u32 {
    2 * m.x_exp + 7 * u32::from(m.y_exp)
}

/// The first `n + 1` monomials ordered by pole order at infinity.
pub fn monomial_basis(n: usize) -> Vec<Monomial> {
    // orders 0, 2, 4, 6, 7, 8, 9, ...: even orders come from x^a, odd ones (>= 7) from x^a y
    (0u32..)
        .filter(|&k| !matches!(k, 1 | 3 | 5))
        .take(n + 1)
        .map(|k| if k % 2 == 0 { Monomial::new(k / 2, 0) } else { Monomial::new((k - 7) / 2, 1) })
        .collect()
}

/// `a(x) + b(x) y` in the coordinate ring, with `y^2` always reduced through `f`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CurveFunction {
    pub a: LaurentPoly,
    pub b: LaurentPoly,
}

impl CurveFunction {
    pub fn new(a: LaurentPoly, b: LaurentPoly) -> Self {
        Self { a, b }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn x() -> Self {
        Self::new(LaurentPoly::x_pow(1), LaurentPoly::zero())
    }

    pub fn y() -> Self {
        Self::new(LaurentPoly::zero(), LaurentPoly::x_pow(0))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(&self.a + &other.a, &self.b + &other.b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(&self.a - &other.a, &self.b - &other.b)
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.a, -&self.b)
    }

    pub fn scale_rational(&self, k: &BigRational) -> Self {
        Self::new(self.a.scale_rational(k), self.b.scale_rational(k))
    }

    pub fn mul(&self, other: &Self, curve: &Curve) -> Self {
        let bb = &self.b * &other.b;
        let a = &(&self.a * &other.a) + &(&bb * curve.f_poly());
        let b = &(&self.a * &other.b) + &(&self.b * &other.a);
        Self::new(a, b)
    }

    pub fn has_negative_powers(&self) -> bool {
        self.a.has_negative_powers() || self.b.has_negative_powers()
    }

    /// `d/du_j` along the curve: `D_j(a + b y) = ((2 f b' + f' b) + 2 a' y) / x^(j-1)`.
    pub fn derive(&self, j: usize, curve: &Curve) -> Self {
        assert!((1..=3).contains(&j), "derivation index must be 1, 2 or 3");
        let f = curve.f_poly();
        let fp = f.derivative();
        let two = BigRational::from_integer(BigInt::from(2));
        let a = &(f * &self.b.derivative()).scale_rational(&two) + &(&fp * &self.b);
        let b = self.a.derivative().scale_rational(&two);
        let shift = -(j as i64 - 1);
        Self::new(a.shift(shift), b.shift(shift))
    }

    pub fn eval(&self, p: &CurvePoint) -> Result<Complex64> {
        if p.at_infinity {
            return Err(Error::InfinityNotSupported);
        }
        if p.x == Complex64::new(0.0, 0.0) && self.has_negative_powers() {
            return Err(Error::PoleAtPoint);
        }
        Ok(self.a.eval(p.x) + self.b.eval(p.x) * p.y)
    }

    /// Largest pole order at infinity among the terms, with `x^-1` counting `-2`.
    pub fn pole_order(&self) -> Option<i64> {
        let a = self.a.max_exp().map(|e| 2 * e);
        let b = self.b.max_exp().map(|e| 2 * e + 7);
        a.max(b)
    }
}

impl fmt::Display for CurveFunction {
    /// Terms `c*x^a` followed by `c*x^a*y`, exponents increasing, joined by ` + `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (part, suffix) in [(&self.a, ""), (&self.b, "*y")] {
            for (e, c) in part.terms() {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "{c}*x^{e}{suffix}")?;
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for CurveFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let mut out = CurveFunction::zero();
        if s == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let (body, has_y) = match term.strip_suffix("*y") {
                Some(b) => (b, true),
                None => (term, false),
            };
            let (coeff, exp) = body.rsplit_once("*x^").ok_or_else(|| format!("malformed term {term:?}"))?;
            let c: ExactComplex = coeff.parse()?;
            let e: i64 = exp.parse().map_err(|_| format!("malformed exponent in {term:?}"))?;
            if has_y {
                out.b.add_term(e, c);
            } else {
                out.a.add_term(e, c);
            }
        }
        Ok(out)
    }
}
