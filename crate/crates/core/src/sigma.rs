//! The normalized sigma function, its partial derivatives, Kleinian `wp`-functions and
//! quasi-periodicity factors.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::periods::{CMatrix3, CVector3, PeriodData};
use crate::theta::{theta_jet, truncation_radius, Jet, ThetaCharacteristics};
use crate::{Config, Curve, Error, Result};

/// Partial-derivative orders with respect to `u1, u2, u3`, total order at most 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    orders: [u8; 3],
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { orders: [0; 3] };

    pub fn new(orders: [u8; 3]) -> Result<Self> {
        if orders.iter().map(|&o| o as u32).sum::<u32>() > 3 {
            return Err(Error::InvalidArgument(format!("derivative order {orders:?} exceeds 3")));
        }
        Ok(Self { orders })
    }

    /// From 1-based variable indices: `[1, 3]` is `d^2 / du1 du3`.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut orders = [0u8; 3];
        for &j in indices {
            if !(1..=3).contains(&j) {
                return Err(Error::InvalidArgument(format!("variable index {j} not in 1..=3")));
            }
            orders[j - 1] += 1;
        }
        Self::new(orders)
    }

    pub fn orders(&self) -> [u8; 3] {
        self.orders
    }

    pub fn total(&self) -> usize {
        self.orders.iter().map(|&o| o as usize).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (k, &o) in self.orders.iter().enumerate() {
            for _ in 0..o {
                s.push(char::from(b'1' + k as u8));
            }
        }
        if s.is_empty() {
            s.push('-');
        }
        f.write_str(&s)
    }
}

/// Sigma jet at a point: the derivatives are `exp(log_scale) * jet`.
#[derive(Clone, Copy, Debug)]
pub struct SigmaJet {
    pub log_scale: Complex64,
    pub jet: Jet,
}

impl SigmaJet {
    pub fn partial(&self, d: MultiIndex) -> Complex64 {
        self.log_scale.exp() * self.jet.partial(d.orders)
    }

    /// Upper estimate of `max |sigma|` on the sphere of radius `rho` around the point,
    /// from the third-order Taylor polynomial (in units of `exp(log_scale)`).
    fn local_scale(&self, rho: f64) -> f64 {
        let j = &self.jet;
        let g: f64 = j.d1.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let h: f64 = j.d2.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let t: f64 = j.d3.iter().flatten().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        j.v.norm() + rho * g + rho * rho * h / 2.0 + rho.powi(3) * t / 6.0
    }
}

/// How the theta characteristic was chosen.
#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicChoice {
    pub characteristics: ThetaCharacteristics,
    /// `true` when the reference characteristic passed the normalization gate.
    pub reference_accepted: bool,
    /// Number of candidates passing the gate (exactly one is expected).
    pub candidates_passing: usize,
    /// Worst relative deviation from the quadratic expansion `u1 u3 - u2^2`.
    pub gate_residual: f64,
}

/// The normalized sigma function of a curve. Immutable after construction apart from the
/// cache of quasi-periodicity signs.
#[derive(Debug)]
pub struct SigmaContext {
    pub curve: Curve,
    pub periods: PeriodData,
    pub characteristics: ThetaCharacteristics,
    pub c: Complex64,
    pub trunc_radius: usize,
    pub target_tol: f64,
    pub choice: CharacteristicChoice,
    w: CMatrix3,
    h: CMatrix3,
    theta_div_tol: f64,
    origin_tol: f64,
    chi_cache: Mutex<HashMap<ParityClass, i8>>,
}

/// `(a mod 2, b mod 2)` of a lattice vector.
type ParityClass = ([u8; 3], [u8; 3]);

impl Clone for SigmaContext {
    fn clone(&self) -> Self {
        Self {
            curve: self.curve.clone(),
            periods: self.periods.clone(),
            characteristics: self.characteristics,
            c: self.c,
            trunc_radius: self.trunc_radius,
            target_tol: self.target_tol,
            choice: self.choice.clone(),
            w: self.w,
            h: self.h,
            theta_div_tol: self.theta_div_tol,
            origin_tol: self.origin_tol,
            chi_cache: Mutex::new(self.chi_cache.lock().expect("chi cache").clone()),
        }
    }
}

/// Relative tolerance for the normalization gate `d^2 sigma / du2^2 (0) = -2`.
const NORMALIZATION_TOL: f64 = 1e-6;

impl SigmaContext {
    /// Build the context, choosing the theta characteristic by the normalization gate:
    /// the reference characteristic is tried first, then every even half-integer
    /// characteristic; exactly one must reproduce `sigma = u1 u3 - u2^2 + ...`.
    pub fn new(curve: &Curve, periods: &PeriodData, config: &Config) -> Result<Self> {
        let reference = ThetaCharacteristics::reference();
        if let Ok(mut ctx) = Self::with_characteristics(curve, periods, reference, config) {
            ctx.choice.reference_accepted = true;
            ctx.choice.candidates_passing = 1;
            return Ok(ctx);
        }
        let passing: Vec<SigmaContext> = ThetaCharacteristics::all_half_integer()
            .filter(|ch| ch.parity() == 0)
            .filter_map(|ch| Self::with_characteristics(curve, periods, ch, config).ok())
            .collect();
        let count = passing.len();
        let mut best = passing
            .into_iter()
            .min_by(|a, b| a.choice.gate_residual.total_cmp(&b.choice.gate_residual))
            .ok_or_else(|| {
                Error::DegenerateNormalization("no half-integer characteristic reproduces u1 u3 - u2^2".into())
            })?;
        best.choice.candidates_passing = count;
        Ok(best)
    }

    /// Build the context with a fixed characteristic; fails with `DegenerateNormalization`
    /// unless the normalized expansion at the origin is `u1 u3 - u2^2 + (order >= 4)`.
    pub fn with_characteristics(
        curve: &Curve,
        periods: &PeriodData,
        characteristics: ThetaCharacteristics,
        config: &Config,
    ) -> Result<Self> {
        let w = periods.omega1_inv();
        let legendre = periods.eta1 * w;
        let h = (legendre + legendre.transpose()) * Complex64::new(0.5, 0.0);
        let trunc_radius = config
            .trunc_radius_override
            .unwrap_or_else(|| truncation_radius(&periods.z, config.target_tol) + 1);
        let mut ctx = Self {
            curve: curve.clone(),
            periods: periods.clone(),
            characteristics,
            c: Complex64::new(1.0, 0.0),
            trunc_radius,
            target_tol: config.target_tol,
            choice: CharacteristicChoice {
                characteristics,
                reference_accepted: false,
                candidates_passing: 0,
                gate_residual: f64::NAN,
            },
            w,
            h,
            theta_div_tol: config.theta_div_tol,
            origin_tol: config.origin_tol,
            chi_cache: Mutex::new(HashMap::new()),
        };
        let c = ctx.normalize()?;
        ctx.c = c;
        Ok(ctx)
    }

    /// `c = 1 / (d^2 sigma~ / du1 du3)(0)` for the unnormalized series, then the gate
    /// `d^2 sigma / du2^2 (0) = -2` and vanishing of the remaining low-order terms.
    fn normalize(&mut self) -> Result<Complex64> {
        self.c = Complex64::new(1.0, 0.0);
        let j0 = self.sigma_jet(&CVector3::zeros(), 2);
        let scale = j0.log_scale.exp();
        let d13 = j0.jet.d2[0][2] * scale;
        if d13.norm() < 1e-12 {
            return Err(Error::DegenerateNormalization(format!("mixed partial d13 = {d13:e} at the origin")));
        }
        let c = 1.0 / d13;
        let n = |v: Complex64| v * scale * c;
        let d22 = n(j0.jet.d2[1][1]);
        let mut residual = ((d22 + 2.0) / 2.0).norm();
        let others = [
            n(j0.jet.v),
            n(j0.jet.d1[0]),
            n(j0.jet.d1[1]),
            n(j0.jet.d1[2]),
            n(j0.jet.d2[0][0]),
            n(j0.jet.d2[0][1]),
            n(j0.jet.d2[1][2]),
            n(j0.jet.d2[2][2]),
        ];
        for v in others {
            residual = residual.max(v.norm());
        }
        if residual > NORMALIZATION_TOL {
            return Err(Error::DegenerateNormalization(format!(
                "expansion at the origin deviates from u1 u3 - u2^2 by {residual:e} (d22 = {d22})"
            )));
        }
        self.choice.gate_residual = residual;
        Ok(c)
    }

    /// `omega'^{-1}`, the map from `u` to the theta argument.
    pub fn theta_argument_map(&self) -> &CMatrix3 {
        &self.w
    }

    /// Relative size below which `sigma_2` counts as vanishing.
    pub fn origin_tol(&self) -> f64 {
        self.origin_tol
    }

    /// Symmetric matrix `eta' omega'^{-1}` of the Gaussian prefactor.
    pub fn prefactor_matrix(&self) -> &CMatrix3 {
        &self.h
    }

    /// Partial derivative of the characteristic theta series with respect to `z`.
    pub fn theta_char(&self, z: &CVector3, d: MultiIndex) -> Complex64 {
        let (s, jet) = theta_jet(z, &self.periods.z, &self.characteristics, self.trunc_radius, d.total());
        jet.partial(d.orders) * s.exp()
    }

    /// Sigma and all partial derivatives up to `order` at `u`.
    pub fn sigma_jet(&self, u: &CVector3, order: usize) -> SigmaJet {
        let z = self.w * u;
        let (theta_scale, tj) = theta_jet(&z, &self.periods.z, &self.characteristics, self.trunc_radius, order);
        let tj = tj.pull_back(&self.w);
        let hu = self.h * u;
        let q = -0.5 * (u.transpose() * hu)[(0, 0)];
        let grad: [Complex64; 3] = std::array::from_fn(|k| -hu[k]);
        let hess: [[Complex64; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| -self.h[(a, b)]));
        let jet = Jet::exp_quadratic(grad, hess).mul(&tj);
        SigmaJet { log_scale: self.c.ln() + q + theta_scale, jet }
    }

    pub fn sigma(&self, u: &CVector3, d: MultiIndex) -> Complex64 {
        self.sigma_jet(u, d.total()).partial(d)
    }

    fn check_off_divisor(&self, u: &CVector3, sj: &SigmaJet) -> Result<()> {
        let rho = u.norm().max(1e-3);
        let scale = sj.local_scale(rho);
        let value = sj.jet.v.norm();
        if value < self.theta_div_tol * scale {
            let unit = sj.log_scale.re.exp();
            return Err(Error::OnThetaDivisor { value: value * unit, scale: scale * unit });
        }
        Ok(())
    }

    /// All `wp_jk` and `wp_jkl` at `u`.
    pub fn wp_all(&self, u: &CVector3) -> Result<WpValues> {
        let sj = self.sigma_jet(u, 3);
        self.check_off_divisor(u, &sj)?;
        Ok(WpValues::from_jet(&sj.jet))
    }

    /// `wp_{jk}` or `wp_{jkl}` for 1-based indices.
    pub fn wp(&self, u: &CVector3, indices: &[usize]) -> Result<Complex64> {
        if !(2..=3).contains(&indices.len()) || indices.iter().any(|j| !(1..=3).contains(j)) {
            return Err(Error::InvalidArgument(format!("wp indices {indices:?}")));
        }
        let all = self.wp_all(u)?;
        let i: Vec<usize> = indices.iter().map(|j| j - 1).collect();
        Ok(match i.as_slice() {
            [a, b] => all.p2[*a][*b],
            [a, b, c] => all.p3[*a][*b][*c],
            _ => unreachable!(),
        })
    }

    /// `L(u, l) = -u^T (eta' a + eta'' b)` for `l = omega' a + omega'' b`.
    ///
    /// The sign follows from the Gaussian prefactor `exp(-u eta' omega'^-1 u / 2)` together
    /// with the Legendre relation `omega' eta''^T - omega'' eta'^T = 2 pi i` satisfied by the
    /// computed periods.
    pub fn l_form(&self, u: &CVector3, a: [i64; 3], b: [i64; 3]) -> Complex64 {
        let av = CVector3::from_iterator(a.iter().map(|&v| Complex64::new(v as f64, 0.0)));
        let bv = CVector3::from_iterator(b.iter().map(|&v| Complex64::new(v as f64, 0.0)));
        let eta = self.periods.eta1 * av + self.periods.eta2 * bv;
        -(u.transpose() * eta)[(0, 0)]
    }

    /// `exp L(u + l/2, l)`.
    pub fn translation_factor(&self, u: &CVector3, a: [i64; 3], b: [i64; 3]) -> Complex64 {
        let l = self.periods.lattice_point(a, b);
        self.l_form(&(u + l * Complex64::new(0.5, 0.0)), a, b).exp()
    }

    /// Ratio `sigma(u + l) / (sigma(u) exp L(u + l/2, l))`, evaluated in log form.
    pub fn translation_ratio(&self, u: &CVector3, a: [i64; 3], b: [i64; 3]) -> Complex64 {
        let l = self.periods.lattice_point(a, b);
        let s0 = self.sigma_jet(u, 0);
        let s1 = self.sigma_jet(&(u + l), 0);
        let log_l = self.l_form(&(u + l * Complex64::new(0.5, 0.0)), a, b);
        (s1.log_scale - s0.log_scale - log_l).exp() * (s1.jet.v / s0.jet.v)
    }

    /// `(chi(l), exp L(u + l/2, l))` with `chi(l) = +-1` determined from probe points and
    /// cached per `(a, b) mod 2`.
    pub fn quasi_period_factor(&self, u: &CVector3, a: [i64; 3], b: [i64; 3]) -> Result<(i8, Complex64)> {
        let factor = self.translation_factor(u, a, b);
        let key = (a.map(|v| v.rem_euclid(2) as u8), b.map(|v| v.rem_euclid(2) as u8));
        if let Some(&chi) = self.chi_cache.lock().expect("chi cache").get(&key) {
            return Ok((chi, factor));
        }
        let mut chi = 0i8;
        for probe in probe_points() {
            let r = self.translation_ratio(&probe, a, b);
            let sign: i8 = if r.re >= 0.0 { 1 } else { -1 };
            if (r - f64::from(sign)).norm() > 1e-5 || (chi != 0 && chi != sign) {
                return Err(Error::InconsistentChi { ratio: format!("{r}") });
            }
            chi = sign;
        }
        self.chi_cache.lock().expect("chi cache").insert(key, chi);
        Ok((chi, factor))
    }

    /// Taylor coefficient of `u1^p1 u2^p2 u3^p3` at the origin by a discrete Cauchy integral
    /// over a torus of radius `radius` with `n` nodes per active variable.
    pub fn taylor_coefficient(&self, powers: [u32; 3], radius: f64, n: usize) -> Complex64 {
        let active: Vec<usize> = (0..3).filter(|&k| powers[k] > 0).collect();
        let total = n.pow(active.len() as u32);
        let mut acc = Complex64::new(0.0, 0.0);
        for idx in 0..total {
            let mut u = CVector3::zeros();
            let mut phase = 0.0;
            let mut rem = idx;
            for &k in &active {
                let m = rem % n;
                rem /= n;
                let ang = 2.0 * PI * m as f64 / n as f64;
                u[k] = Complex64::from_polar(radius, ang);
                phase -= powers[k] as f64 * ang;
            }
            acc += self.sigma(&u, MultiIndex::ZERO) * Complex64::from_polar(1.0, phase);
        }
        let degree: u32 = powers.iter().sum();
        acc / (total as f64 * radius.powi(degree as i32))
    }
}

/// Deterministic probe points of moderate size for determining `chi`.
fn probe_points() -> [CVector3; 3] {
    let c = Complex64::new;
    [
        CVector3::new(c(0.13, -0.07), c(0.21, 0.11), c(-0.17, 0.05)),
        CVector3::new(c(-0.09, 0.19), c(0.04, -0.23), c(0.27, 0.12)),
        CVector3::new(c(0.31, 0.02), c(-0.15, -0.08), c(0.06, -0.29)),
    ]
}

/// `wp_jk = -d_j d_k log sigma` and `wp_jkl = -d_j d_k d_l log sigma`, 0-based.
#[derive(Clone, Copy, Debug)]
pub struct WpValues {
    pub p2: [[Complex64; 3]; 3],
    pub p3: [[[Complex64; 3]; 3]; 3],
}

impl WpValues {
    pub fn from_jet(j: &Jet) -> Self {
        let s = j.v;
        let g = j.d1.map(|v| v / s);
        let h: [[Complex64; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| j.d2[a][b] / s));
        let mut p2 = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut p3 = [[[Complex64::new(0.0, 0.0); 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                p2[a][b] = g[a] * g[b] - h[a][b];
                for c in 0..3 {
                    let t = j.d3[a][b][c] / s;
                    p3[a][b][c] = -(t - h[a][b] * g[c] - h[a][c] * g[b] - h[b][c] * g[a] + 2.0 * g[a] * g[b] * g[c]);
                }
            }
        }
        Self { p2, p3 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periods::compute_periods;
    use std::sync::OnceLock;

    fn ctx() -> &'static SigmaContext {
        static CTX: OnceLock<SigmaContext> = OnceLock::new();
        CTX.get_or_init(|| {
            let cfg = Config::default();
            let curve = Curve::x7_plus_1();
            let pd = compute_periods(&curve, &cfg).unwrap();
            SigmaContext::new(&curve, &pd, &cfg).unwrap()
        })
    }

    fn sample_u() -> CVector3 {
        let c = Complex64::new;
        CVector3::new(c(0.21, -0.13), c(-0.08, 0.17), c(0.35, 0.04))
    }

    #[test]
    fn multi_index_bounds() {
        assert!(MultiIndex::new([2, 1, 1]).is_err());
        assert_eq!(MultiIndex::from_indices(&[1, 3]).unwrap().orders(), [1, 0, 1]);
        assert_eq!(MultiIndex::from_indices(&[2, 2, 3]).unwrap().to_string(), "223");
        assert!(MultiIndex::from_indices(&[4]).is_err());
    }

    #[test]
    fn normalized_expansion_at_origin() {
        let ctx = ctx();
        assert_eq!(ctx.choice.candidates_passing, 1);
        let zero = CVector3::zeros();
        let d = |i: &[usize]| ctx.sigma(&zero, MultiIndex::from_indices(i).unwrap());
        assert!(d(&[]).norm() < 1e-12);
        assert!((d(&[1, 3]) - 1.0).norm() < 1e-10);
        assert!((d(&[2, 2]) + 2.0).norm() < 1e-6);
        for j in 1..=3 {
            assert!(d(&[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn sigma_is_even() {
        let ctx = ctx();
        let u = sample_u();
        let a = ctx.sigma(&u, MultiIndex::ZERO);
        let b = ctx.sigma(&(-u), MultiIndex::ZERO);
        assert!((a - b).norm() <= 1e-10 * a.norm());
        let d2 = MultiIndex::from_indices(&[2]).unwrap();
        assert!((ctx.sigma(&u, d2) + ctx.sigma(&(-u), d2)).norm() <= 1e-10 * ctx.sigma(&u, d2).norm());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let ctx = ctx();
        let u = sample_u();
        let h = 1e-5;
        let jet = ctx.sigma_jet(&u, 3);
        for k in 0..3 {
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let (jp, jm) = (ctx.sigma_jet(&up, 2), ctx.sigma_jet(&um, 2));
            let fd = (ctx.sigma(&up, MultiIndex::ZERO) - ctx.sigma(&um, MultiIndex::ZERO)) / (2.0 * h);
            let mut orders = [0u8; 3];
            orders[k] = 1;
            let exact = jet.partial(MultiIndex::new(orders).unwrap());
            assert!((fd - exact).norm() <= 1e-6 * exact.norm());
            for a in 0..3 {
                for b in 0..3 {
                    let fd3 = (jp.log_scale.exp() * jp.jet.d2[a][b] - jm.log_scale.exp() * jm.jet.d2[a][b]) / (2.0 * h);
                    let exact3 = jet.log_scale.exp() * jet.jet.d3[a][b][k];
                    assert!((fd3 - exact3).norm() <= 1e-6 * exact3.norm().max(jet.partial(MultiIndex::ZERO).norm()));
                }
            }
        }
    }

    #[test]
    fn translation_formula_with_half_period_argument() {
        let ctx = ctx();
        let u = sample_u();
        for k in 0..3 {
            let mut e = [0i64; 3];
            e[k] = 1;
            for (a, b) in [(e, [0; 3]), ([0; 3], e)] {
                let r = ctx.translation_ratio(&u, a, b);
                assert!((r.norm() - 1.0).abs() < 1e-6, "{r}");
                let (chi, _) = ctx.quasi_period_factor(&u, a, b).unwrap();
                assert!((r - f64::from(chi)).norm() < 1e-6);
            }
        }
        let (chi, factor) = ctx.quasi_period_factor(&u, [0; 3], [0; 3]).unwrap();
        assert_eq!(chi, 1);
        assert!((factor - 1.0).norm() < 1e-15);
    }

    #[test]
    fn wp_is_periodic_and_symmetric() {
        let ctx = ctx();
        let u = sample_u();
        let w0 = ctx.wp_all(&u).unwrap();
        let l = ctx.periods.lattice_point([1, 0, -1], [0, 1, 0]);
        let w1 = ctx.wp_all(&(u + l)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(w0.p2[a][b], w0.p2[b][a]);
                assert!((w0.p2[a][b] - w1.p2[a][b]).norm() <= 1e-6 * w0.p2[a][b].norm().max(1.0));
            }
        }
    }

    #[test]
    fn wp_rejects_the_origin() {
        assert!(matches!(ctx().wp_all(&CVector3::zeros()), Err(Error::OnThetaDivisor { .. })));
    }
}
