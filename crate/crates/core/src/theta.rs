//! Riemann theta series with half-integer characteristics and term-wise derivatives.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::periods::{CMatrix3, CVector3};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Characteristics `[delta''; delta']`: `delta''` shifts the summation index and
/// `delta'` the argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCharacteristics {
    pub delta1: [f64; 3],
    pub delta2: [f64; 3],
}

impl ThetaCharacteristics {
    pub fn new(delta1: [f64; 3], delta2: [f64; 3]) -> Self {
        let wrap = |v: [f64; 3]| v.map(|x| x.rem_euclid(1.0));
        Self { delta1: wrap(delta1), delta2: wrap(delta2) }
    }

    /// `delta'' = (1/2, 1/2, 1/2)`, `delta' = (0, 1/2, 1)` reduced mod 1.
    pub fn reference() -> Self {
        Self::new([0.0, 0.5, 1.0], [0.5, 0.5, 0.5])
    }

    /// `4 delta' . delta'' mod 2` for half-integer characteristics: 0 even, 1 odd.
    pub fn parity(&self) -> u8 {
        let s: f64 = self.delta1.iter().zip(&self.delta2).map(|(a, b)| a * b).sum();
        ((4.0 * s).round() as i64).rem_euclid(2) as u8
    }

    /// The 64 half-integer characteristics.
    pub fn all_half_integer() -> impl Iterator<Item = Self> {
        (0u32..64).map(|bits| {
            let half = |k: u32| if bits >> k & 1 == 1 { 0.5 } else { 0.0 };
            Self::new([half(0), half(1), half(2)], [half(3), half(4), half(5)])
        })
    }
}

impl Default for ThetaCharacteristics {
    fn default() -> Self {
        Self::reference()
    }
}

/// Smallest eigenvalue of the symmetric part of `Im Z`.
pub fn min_imag_eigenvalue(z: &CMatrix3) -> f64 {
    let y = z.map(|c| c.im);
    SymmetricEigen::new((y + y.transpose()) * 0.5).eigenvalues.min()
}

/// Smallest `R` with `sum_{n in Z^3, |n|_inf > R} exp(-pi lambda_min |n|^2) < target_tol`.
pub fn truncation_radius(z: &CMatrix3, target_tol: f64) -> usize {
    truncation_radius_for(min_imag_eigenvalue(z), target_tol)
}

pub fn truncation_radius_for(lambda_min: f64, target_tol: f64) -> usize {
    assert!(lambda_min > 0.0, "Im Z must be positive definite");
    let one_dim = |r: Option<usize>| {
        // sum over |k| <= r (all k when r is None), summed until terms underflow
        let mut s = 1.0;
        let mut k = 1usize;
        loop {
            if r.is_some_and(|r| k > r) {
                break;
            }
            let t = (-PI * lambda_min * (k * k) as f64).exp();
            if t < 1e-300 {
                break;
            }
            s += 2.0 * t;
            k += 1;
        }
        s
    };
    let full = one_dim(None).powi(3);
    (0..)
        .find(|&r| {
            let inner = one_dim(Some(r)).powi(3);
            // the subtraction loses accuracy for tiny tails; bound the tail directly too
            let tail = full - inner;
            let direct = 6.0 * (-PI * lambda_min * ((r + 1) * (r + 1)) as f64).exp() * full;
            tail.max(0.0).min(direct) < target_tol && direct < target_tol.max(tail)
        })
        .expect("finite radius")
}

/// Value and partial derivatives up to third order of a function of three variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: Complex64,
    pub d1: [Complex64; 3],
    pub d2: [[Complex64; 3]; 3],
    pub d3: [[[Complex64; 3]; 3]; 3],
}

impl Jet {
    pub fn zero() -> Self {
        Self { v: ZERO, d1: [ZERO; 3], d2: [[ZERO; 3]; 3], d3: [[[ZERO; 3]; 3]; 3] }
    }

    /// Partial derivative with the given orders in each variable (total order <= 3).
    pub fn partial(&self, orders: [u8; 3]) -> Complex64 {
        let mut idx = Vec::with_capacity(3);
        for (k, &o) in orders.iter().enumerate() {
            idx.extend(std::iter::repeat_n(k, o as usize));
        }
        match idx.as_slice() {
            [] => self.v,
            [a] => self.d1[*a],
            [a, b] => self.d2[*a][*b],
            [a, b, c] => self.d3[*a][*b][*c],
            _ => panic!("derivative order above 3"),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        out.v *= s;
        for a in 0..3 {
            out.d1[a] *= s;
            for b in 0..3 {
                out.d2[a][b] *= s;
                for c in 0..3 {
                    out.d3[a][b][c] *= s;
                }
            }
        }
        out
    }

    /// Leibniz rule.
    pub fn mul(&self, g: &Jet) -> Jet {
        let f = self;
        let mut out = Jet::zero();
        out.v = f.v * g.v;
        for a in 0..3 {
            out.d1[a] = f.d1[a] * g.v + f.v * g.d1[a];
            for b in 0..3 {
                out.d2[a][b] = f.d2[a][b] * g.v + f.d1[a] * g.d1[b] + f.d1[b] * g.d1[a] + f.v * g.d2[a][b];
                for c in 0..3 {
                    out.d3[a][b][c] = f.d3[a][b][c] * g.v
                        + f.d2[a][b] * g.d1[c]
                        + f.d2[a][c] * g.d1[b]
                        + f.d2[b][c] * g.d1[a]
                        + f.d1[a] * g.d2[b][c]
                        + f.d1[b] * g.d2[a][c]
                        + f.d1[c] * g.d2[a][b]
                        + f.v * g.d3[a][b][c];
                }
            }
        }
        out
    }

    /// Jet of `exp(q)` divided by `exp(q(u))` for a quadratic `q` with gradient `g`
    /// and constant Hessian `h` at the expansion point.
    pub fn exp_quadratic(g: [Complex64; 3], h: [[Complex64; 3]; 3]) -> Jet {
        let mut out = Jet::zero();
        out.v = Complex64::new(1.0, 0.0);
        out.d1 = g;
        for a in 0..3 {
            for b in 0..3 {
                out.d2[a][b] = g[a] * g[b] + h[a][b];
                for c in 0..3 {
                    out.d3[a][b][c] = g[a] * g[b] * g[c] + h[a][b] * g[c] + h[a][c] * g[b] + h[b][c] * g[a];
                }
            }
        }
        out
    }

    /// Change of variables `z = W u`: returns the jet with respect to `u`.
    pub fn pull_back(&self, w: &CMatrix3) -> Jet {
        let mut out = Jet::zero();
        out.v = self.v;
        for j in 0..3 {
            out.d1[j] = (0..3).map(|a| w[(a, j)] * self.d1[a]).sum();
        }
        let mut half = [[[ZERO; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for l in 0..3 {
                    half[a][b][l] = (0..3).map(|c| w[(c, l)] * self.d3[a][b][c]).sum();
                }
            }
        }
        for j in 0..3 {
            for k in 0..3 {
                out.d2[j][k] = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .map(|(a, b)| w[(a, j)] * w[(b, k)] * self.d2[a][b])
                    .sum();
                for l in 0..3 {
                    out.d3[j][k][l] = (0..3)
                        .flat_map(|a| (0..3).map(move |b| (a, b)))
                        .map(|(a, b)| w[(a, j)] * w[(b, k)] * half[a][b][l])
                        .sum();
                }
            }
        }
        out
    }
}

/// Theta series `sum_n exp 2 pi i { (n+d'')^T Z (n+d'')/2 + (n+d'')^T (z+d') }` together with
/// its partial derivatives in `z` up to `order`. The result is `exp(log_scale) * jet`;
/// the summation box of half-width `radius` is centred on the dominant term, so any `z`
/// can be evaluated without overflow.
pub fn theta_jet(
    z_arg: &CVector3,
    period: &CMatrix3,
    chars: &ThetaCharacteristics,
    radius: usize,
    order: usize,
) -> (f64, Jet) {
    let y: Matrix3<f64> = period.map(|c| c.im);
    let y = (y + y.transpose()) * 0.5;
    let im_z = Vector3::new(z_arg[0].im, z_arg[1].im, z_arg[2].im);
    let y_inv = y.try_inverse().expect("Im Z positive definite");
    let m_star = -(y_inv * im_z);
    let log_scale = PI * im_z.dot(&(y_inv * im_z));
    let centre: [i64; 3] = std::array::from_fn(|k| (m_star[k] - chars.delta2[k]).round() as i64);
    let r = radius as i64;

    let shifted: [Complex64; 3] = std::array::from_fn(|k| z_arg[k] + chars.delta1[k]);
    let mut jet = Jet::zero();
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                let m = [
                    (centre[0] + i) as f64 + chars.delta2[0],
                    (centre[1] + j) as f64 + chars.delta2[1],
                    (centre[2] + k) as f64 + chars.delta2[2],
                ];
                let mut quad = ZERO;
                for a in 0..3 {
                    let mut row = ZERO;
                    for b in 0..3 {
                        row += period[(a, b)] * m[b];
                    }
                    quad += row * m[a];
                }
                let lin: Complex64 = (0..3).map(|a| shifted[a] * m[a]).sum();
                let term = (2.0 * PI * I * (0.5 * quad + lin) - log_scale).exp();
                jet.v += term;
                if order == 0 {
                    continue;
                }
                let f = m.map(|mk| 2.0 * PI * I * mk);
                for a in 0..3 {
                    let ta = term * f[a];
                    jet.d1[a] += ta;
                    if order == 1 {
                        continue;
                    }
                    for b in a..3 {
                        let tab = ta * f[b];
                        jet.d2[a][b] += tab;
                        if order == 2 {
                            continue;
                        }
                        for c in b..3 {
                            jet.d3[a][b][c] += tab * f[c];
                        }
                    }
                }
            }
        }
    }
    // fill the symmetric entries
    for a in 0..3 {
        for b in a..3 {
            jet.d2[b][a] = jet.d2[a][b];
            for c in b..3 {
                let v = jet.d3[a][b][c];
                for (p, q, s) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    jet.d3[p][q][s] = v;
                }
            }
        }
    }
    (log_scale, jet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_period() -> CMatrix3 {
        let re = Matrix3::new(0.1, -0.2, 0.05, -0.2, 0.3, 0.0, 0.05, 0.0, -0.4);
        let im = Matrix3::new(1.2, 0.3, 0.1, 0.3, 0.9, -0.2, 0.1, -0.2, 0.8);
        CMatrix3::from_fn(|r, c| Complex64::new(re[(r, c)], im[(r, c)]))
    }

    #[test]
    fn radius_examples() {
        assert!(truncation_radius_for(1.0, 1e-12) <= 4);
        let radii: Vec<usize> = [1e-6, 1e-12, 1e-50, 1e-300].iter().map(|&t| truncation_radius_for(1.0, t)).collect();
        assert!(radii.windows(2).all(|w| w[0] <= w[1]));
        assert!(radii[3] > radii[0]);
        for tol in [1e-8, 1e-16, 1e-100] {
            assert!(truncation_radius_for(2.0, tol) <= truncation_radius_for(1.0, tol));
        }
    }

    #[test]
    fn radius_meets_the_tail_bound() {
        // brute-force tail over a large box
        let lambda = 0.7;
        let tol = 1e-10;
        let r = truncation_radius_for(lambda, tol) as i64;
        let tail = |r: i64| {
            let mut s = 0.0;
            for i in -15i64..=15 {
                for j in -15i64..=15 {
                    for k in -15i64..=15 {
                        if i.abs().max(j.abs()).max(k.abs()) > r {
                            s += (-PI * lambda * (i * i + j * j + k * k) as f64).exp();
                        }
                    }
                }
            }
            s
        };
        assert!(tail(r) < tol);
        assert!(tail(r - 1) >= tol);
    }

    #[test]
    fn parity_of_reference_characteristic() {
        assert_eq!(ThetaCharacteristics::reference().parity(), 1);
        assert_eq!(ThetaCharacteristics::new([0.0; 3], [0.0; 3]).parity(), 0);
        let even = ThetaCharacteristics::all_half_integer().filter(|c| c.parity() == 0).count();
        assert_eq!(even, 36);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = sample_period();
        let chars = ThetaCharacteristics::new([0.0, 0.5, 0.0], [0.5, 0.0, 0.5]);
        let z = CVector3::new(Complex64::new(0.3, 0.2), Complex64::new(-0.1, 0.4), Complex64::new(0.25, -0.3));
        let eval = |z: &CVector3| {
            let (s, j) = theta_jet(z, &p, &chars, 8, 3);
            j.scale(Complex64::new(s, 0.0).exp())
        };
        let base = eval(&z);
        let h = 1e-5;
        for a in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[a] += h;
            zm[a] -= h;
            let (jp, jm) = (eval(&zp), eval(&zm));
            let fd = (jp.v - jm.v) / (2.0 * h);
            assert!((fd - base.d1[a]).norm() <= 1e-6 * base.d1[a].norm().max(base.v.norm()));
            for b in 0..3 {
                let fd2 = (jp.d1[b] - jm.d1[b]) / (2.0 * h);
                assert!((fd2 - base.d2[a][b]).norm() <= 1e-6 * base.d2[a][b].norm().max(1.0));
                for c in 0..3 {
                    let fd3 = (jp.d2[b][c] - jm.d2[b][c]) / (2.0 * h);
                    assert!((fd3 - base.d3[a][b][c]).norm() <= 1e-6 * base.d3[a][b][c].norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn odd_characteristic_is_odd() {
        let p = sample_period();
        let chars = ThetaCharacteristics::reference();
        let z = CVector3::new(Complex64::new(0.3, 0.2), Complex64::new(-0.1, 0.4), Complex64::new(0.25, -0.3));
        let (s1, j1) = theta_jet(&z, &p, &chars, 8, 0);
        let (s2, j2) = theta_jet(&(-z), &p, &chars, 8, 0);
        let a = j1.v * s1.exp();
        let b = j2.v * s2.exp();
        assert!((a + b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn centring_handles_large_arguments() {
        // theta(z + Z e_1) = exp(-pi i Z_11 - 2 pi i (z_1 + d'_1)) * phase * theta(z)
        let p = sample_period();
        let chars = ThetaCharacteristics::new([0.0; 3], [0.0; 3]);
        let z = CVector3::new(Complex64::new(0.1, 0.05), Complex64::new(0.2, -0.1), Complex64::new(-0.3, 0.0));
        let shift = CVector3::from_fn(|r, _| p[(r, 0)] * 5.0);
        let (s0, j0) = theta_jet(&z, &p, &chars, 8, 0);
        let (s1, j1) = theta_jet(&(z + shift), &p, &chars, 8, 0);
        let log_ratio = (j1.v / j0.v).ln() + (s1 - s0);
        let want = -PI * I * 25.0 * p[(0, 0)] - 2.0 * PI * I * 5.0 * z[0];
        let diff = log_ratio - want;
        // equal up to a multiple of 2 pi i
        assert!(diff.re.abs() < 1e-9);
        let turns = diff.im / (2.0 * PI);
        assert!((turns - turns.round()).abs() < 1e-9);
    }
}
