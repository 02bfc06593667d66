use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::abel_jacobi::{x_of_u, y_of_u, JacobianPoint};
use crate::curve::monomial_basis;
use crate::exact::FloatLaurent;
use crate::sigma::SigmaContext;
use crate::{Curve, CurveFunction, Error, Result};

/// Determinant by Laplace expansion along the rows, accumulated over column subsets:
/// `O(2^m m)` ring operations, no division.
pub fn laplace_determinant<T: Clone>(
    m: &[Vec<T>],
    zero: T,
    mul: impl Fn(&T, &T) -> T,
    add: impl Fn(&T, &T) -> T,
    neg: impl Fn(&T) -> T,
) -> T {
    let size = m.len();
    if size == 0 {
        panic!("empty matrix");
    }
    let mut dp: Vec<Option<T>> = vec![None; 1 << size];
    // dp[S] = determinant of the first |S| rows restricted to the columns in S
    for c in 0..size {
        dp[1 << c] = Some(m[0][c].clone());
    }
    for set in 1usize..(1 << size) {
        let Some(val) = dp[set].clone() else { continue };
        let row = set.count_ones() as usize;
        if row == size {
            continue;
        }
        for c in 0..size {
            if set & (1 << c) != 0 {
                continue;
            }
            // sign of moving column c past the chosen columns to its right
            let after = (set >> (c + 1)).count_ones();
            let mut term = mul(&val, &m[row][c]);
            if after % 2 == 1 {
                term = neg(&term);
            }
            let next = set | (1 << c);
            dp[next] = Some(match dp[next].take() {
                Some(v) => add(&v, &term),
                None => term,
            });
        }
    }
    dp[(1 << size) - 1].take().unwrap_or(zero)
}

/// `1! 2! ... (n-1)!`.
fn superfactorial(n: usize) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut fact = BigInt::from(1);
    for k in 1..n {
        fact *= BigInt::from(k);
        acc *= &fact;
    }
    acc
}

/// The `(n-1) x (n-1)` matrix `[D_j^r m_k]`, `r = 1..n-1`, `m_k` the first `n-1`
/// non-constant monomials by pole order, kept exactly and in floating point.
#[derive(Clone, Debug)]
pub struct KiepertMatrix {
    pub n: usize,
    pub j: usize,
    pub entries: Vec<Vec<CurveFunction>>,
    float: Vec<Vec<(FloatLaurent, FloatLaurent)>>,
    norm: f64,
}

impl KiepertMatrix {
    pub fn new(n: usize, j: usize, curve: &Curve) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!("the determinant formula requires n > 3, got {n}")));
        }
        if !(1..=3).contains(&j) {
            return Err(Error::InvalidArgument(format!("derivation index {j} not in 1..=3")));
        }
        let columns: Vec<CurveFunction> = monomial_basis(n - 1).iter().skip(1).map(|m| m.to_function()).collect();
        let mut entries = Vec::with_capacity(n - 1);
        let mut current = columns;
        for _ in 1..n {
            current = current.iter().map(|f| f.derive(j, curve)).collect();
            entries.push(current.clone());
        }
        let float = entries.iter().map(|row| row.iter().map(|f| (f.a.to_float(), f.b.to_float())).collect()).collect();
        let norm = 1.0 / superfactorial(n).to_string().parse::<f64>().expect("finite superfactorial");
        Ok(Self { n, j, entries, float, norm })
    }

    /// Exact `det / (1! ... (n-1)!)` over the coordinate ring.
    pub fn symbolic_determinant(&self, curve: &Curve) -> CurveFunction {
        let det = laplace_determinant(
            &self.entries,
            CurveFunction::zero(),
            |a, b| a.mul(b, curve),
            |a, b| a.add(b),
            |a| a.neg(),
        );
        det.scale_rational(&BigRational::new(BigInt::from(1), superfactorial(self.n)))
    }

    /// `x^((j-1) n (n-1) / 2) det / (1! ... (n-1)!)` at `(x, y)`.
    pub fn eval(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        if self.j > 1 && x == Complex64::new(0.0, 0.0) {
            return Err(Error::PoleAtPoint);
        }
        let size = self.n - 1;
        let m = DMatrix::from_fn(size, size, |r, c| {
            let (a, b) = &self.float[r][c];
            a.eval(x) + b.eval(x) * y
        });
        let power = ((self.j - 1) * self.n * (self.n - 1) / 2) as i32;
        Ok(m.determinant() * x.powi(power) * self.norm)
    }
}

/// `psi_n(u)` from the determinant of iterated derivatives at the point `u` of the curve.
pub fn kiepert_determinant(u: &JacobianPoint, n: usize, j: usize, ctx: &SigmaContext) -> Result<Complex64> {
    let m = KiepertMatrix::new(n, j, &ctx.curve)?;
    m.eval(x_of_u(u, ctx)?, y_of_u(u, ctx)?)
}

/// `psi_n` as an exact polynomial in `x, y` (derivation along `u1`).
pub fn psi_symbolic(n: usize, curve: &Curve) -> Result<CurveFunction> {
    Ok(KiepertMatrix::new(n, 1, curve)?.symbolic_determinant(curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactComplex;
    use crate::Config;

    #[test]
    fn laplace_matches_lu() {
        let m: Vec<Vec<Complex64>> = (0..5)
            .map(|r| (0..5).map(|c| Complex64::new(((r * 7 + c * 3) % 11) as f64 - 5.0, (r as f64 - c as f64) * 0.3)).collect())
            .collect();
        let d = laplace_determinant(&m, Complex64::default(), |a, b| a * b, |a, b| a + b, |a| -a);
        let lu = DMatrix::from_fn(5, 5, |r, c| m[r][c]).determinant();
        assert!((d - lu).norm() < 1e-9 * lu.norm());
    }

    #[test]
    fn superfactorials() {
        assert_eq!(superfactorial(4), BigInt::from(12));
        assert_eq!(superfactorial(5), BigInt::from(288));
    }

    #[test]
    fn first_rows_for_four() {
        // rows (2y, 4xy, 6x^2 y) and (2f', 8f + 4xf', 24xf + 6x^2 f') for u1-derivation
        let curve = Curve::x7_plus_1();
        let k = KiepertMatrix::new(4, 1, &curve).unwrap();
        let two = ExactComplex::from_integer(2);
        assert_eq!(k.entries[0][0].to_string(), format!("{two}*x^0*y"));
        assert_eq!(k.entries[0][1].to_string(), "4*x^1*y");
        assert_eq!(k.entries[1][0].to_string(), "14*x^6");
        // 8(x^7+1) + 4x * 7x^6 = 8 + 36 x^7
        assert_eq!(k.entries[1][1].to_string(), "8*x^0 + 36*x^7");
    }

    #[test]
    fn symbolic_psi_pole_order() {
        let curve = Curve::from_integers([1, 0, 0, 0, 0, 0, 0], &Config::default()).unwrap();
        let psi = psi_symbolic(4, &curve).unwrap();
        assert!(!psi.has_negative_powers());
        // entries D^r m_k have pole order ord(m_k) + 5r: 2+4+6 + 5(1+2+3)
        assert_eq!(psi.pole_order(), Some(42));
    }

    #[test]
    fn small_n_rejected() {
        assert!(psi_symbolic(3, &Curve::x7_plus_1()).is_err());
    }
}
