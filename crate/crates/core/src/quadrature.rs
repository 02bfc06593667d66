//! Quadrature rules: Gauss–Legendre for smooth path segments and a trigonometric
//! substitution for integrands with inverse square-root singularities at both ends.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Shared 24-point rule used for path integrals.
pub fn gl24() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(24))
}

/// Integrate a vector-valued function over `[0, 1]` with `pieces` equal panels of
/// the 24-point Gauss–Legendre rule.
pub fn composite_gl<const N: usize>(pieces: usize, mut f: impl FnMut(f64) -> [Complex64; N]) -> [Complex64; N] {
    let (nodes, weights) = gl24();
    let mut acc = [Complex64::new(0.0, 0.0); N];
    let h = 1.0 / pieces as f64;
    for p in 0..pieces {
        let a = p as f64 * h;
        for (x, w) in nodes.iter().zip(weights) {
            let s = a + 0.5 * h * (x + 1.0);
            let v = f(s);
            for k in 0..N {
                acc[k] += v[k] * (0.5 * h * w);
            }
        }
    }
    acc
}

/// `int_{-pi/2}^{pi/2} g(sin theta) d theta` by the midpoint rule in `theta`, doubling the
/// node count until successive estimates agree to `tol` (relative to the largest
/// component, floored at 1).
///
/// After the substitution `s = sin theta`, an integrand `h(s) / sqrt(1 - s^2)` on `[-1, 1]`
/// becomes the smooth periodic function `h(sin theta)`, for which the midpoint rule
/// converges geometrically.
pub fn endpoint_singular<const N: usize>(
    tol: f64,
    g: impl Fn(f64) -> [Complex64; N],
) -> Result<[Complex64; N]> {
    let rule = |n: usize| {
        let mut acc = [Complex64::new(0.0, 0.0); N];
        let h = PI / n as f64;
        for k in 0..n {
            let theta = -0.5 * PI + (k as f64 + 0.5) * h;
            let v = g(theta.sin());
            for i in 0..N {
                acc[i] += v[i] * h;
            }
        }
        acc
    };
    let mut n = 32;
    let mut prev = rule(n);
    let mut change = f64::INFINITY;
    while n <= 1 << 17 {
        n *= 2;
        let next = rule(n);
        let scale = next.iter().map(|c| c.norm()).fold(1.0, f64::max);
        change = prev.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change <= tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence { tol, change })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // int x^18 = 2/19
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_integrates_exponential() {
        let [v] = composite_gl(3, |s| [Complex64::new(0.0, 2.0 * s).exp()]);
        let want = (Complex64::new(0.0, 2.0).exp() - 1.0) / Complex64::new(0.0, 2.0);
        assert!((v - want).norm() < 1e-14);
    }

    #[test]
    fn arcsine_weight() {
        // int_{-1}^{1} ds / sqrt(1 - s^2) = pi ; int s^2 / sqrt(1-s^2) = pi/2
        let [a, b] = endpoint_singular(1e-13, |s| [Complex64::new(1.0, 0.0), Complex64::new(s * s, 0.0)]).unwrap();
        assert!((a.re - PI).abs() < 1e-13);
        assert!((b.re - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn near_singular_integrand_converges() {
        // 1/(s - 1.05) has a pole just outside the interval; exact value -pi/sqrt(1.05^2 - 1)
        let [v] = endpoint_singular(1e-12, |s| [Complex64::new(1.0 / (s - 1.05), 0.0)]).unwrap();
        let want = -PI / (1.05f64 * 1.05 - 1.0).sqrt();
        assert!((v.re - want).abs() < 1e-10 * want.abs());
    }
}
