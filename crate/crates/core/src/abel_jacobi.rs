//! The Abel–Jacobi map from infinity, its inverse on the curve locus through sigma
//! quotients, and Jacobi inversion of generic points through `wp`-functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::periods::{branch_points, lattice_reduce, CVector3, PeriodData, Reduced};
use crate::quadrature::composite_gl;
use crate::roots::polynomial_roots;
use crate::sigma::SigmaContext;
use crate::{Curve, CurvePoint, Error, Result};

/// A point of `C^3`, the universal cover of the Jacobian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianPoint {
    pub u: CVector3,
}

impl JacobianPoint {
    pub fn new(u: CVector3) -> Self {
        Self { u }
    }

    pub fn zero() -> Self {
        Self { u: CVector3::zeros() }
    }

    pub fn reduce(&self, pd: &PeriodData) -> Reduced {
        lattice_reduce(&self.u, pd)
    }
}

impl std::ops::Add for JacobianPoint {
    type Output = JacobianPoint;
    fn add(self, rhs: Self) -> Self {
        Self { u: self.u + rhs.u }
    }
}

impl std::ops::Sub for JacobianPoint {
    type Output = JacobianPoint;
    fn sub(self, rhs: Self) -> Self {
        Self { u: self.u - rhs.u }
    }
}

impl std::ops::Neg for JacobianPoint {
    type Output = JacobianPoint;
    fn neg(self) -> Self {
        Self { u: -self.u }
    }
}

/// Closest approach of an integration path to a branch point before giving up.
const MIN_CLEARANCE: f64 = 1e-9;

/// `(int_0^t s^4 / r(s) ds, int_0^t s^2 / r(s) ds, int_0^t ds / r(s))` with
/// `r(s) = prod sqrt(1 - e_k s^2)`: the integrals of `omega` from infinity to the point with
/// local parameter `t` on the sheet `y = -t^-7 r(t)`.
pub fn integral_near_infinity(curve: &Curve, t: Complex64) -> CVector3 {
    let [a, b, c] = composite_gl(2, |s| {
        let tau = t * s;
        let inv = t / curve.infinity_root_factor(tau);
        let t2 = tau * tau;
        [t2 * t2 * inv, t2 * inv, inv]
    });
    CVector3::new(a, b, c)
}

/// `u(P) = int_infinity^P (dx/2y, x dx/2y, x^2 dx/2y)`, defined modulo the period lattice.
///
/// The integral runs in the local parameter up to `|t| = radius / 2` and continues along a
/// polyline in the `x`-plane that keeps away from the branch points; `y` is continued
/// along the path. If the continuation ends on the other sheet, the involution
/// `u(x, -y) = -u(x, y)` gives the result.
pub fn abel_jacobi(p: &CurvePoint, curve: &Curve, _pd: &PeriodData) -> Result<JacobianPoint> {
    if p.at_infinity {
        return Ok(JacobianPoint::zero());
    }
    let branch = branch_points(curve)?;
    let roots = branch.roots.clone();
    let clearance = 0.2 * branch.min_separation();
    let target_clearance = branch.distance_to_nearest(p.x);
    if target_clearance < MIN_CLEARANCE {
        return Err(Error::PathNearBranchPoint { clearance: target_clearance });
    }

    // leave infinity in the direction of the target
    let r = 0.5 * curve.infinity_radius();
    let phase = if p.x.norm() > 0.0 { p.x.arg() } else { 0.0 };
    let t0 = Complex64::from_polar(r, -0.5 * phase);
    let x0 = 1.0 / (t0 * t0);
    let mut y = -curve.infinity_root_factor(t0) / t0.powi(7);
    let mut u = integral_near_infinity(curve, t0);

    let path = route(x0, p.x, &roots, clearance);
    for w in path.windows(2) {
        let (du, y_end) = integrate_segment(curve, &roots, w[0], w[1], y)?;
        u += du;
        y = y_end;
    }
    // the continued y and y(P) agree up to sign
    let same = (y - p.y).norm() <= (y + p.y).norm();
    Ok(JacobianPoint::new(if same { u } else { -u }))
}

/// `int_P^Q omega` for `Q` the point over `x_end` reached by continuing `y` from `P` along
/// a path avoiding the branch points. Returns the integral and `Q`.
pub fn integrate_from(p: &CurvePoint, x_end: Complex64, curve: &Curve) -> Result<(CVector3, CurvePoint)> {
    if p.at_infinity {
        return Err(Error::InfinityNotSupported);
    }
    let branch = branch_points(curve)?;
    let clearance = (0.2 * branch.min_separation()).min(0.5 * branch.distance_to_nearest(p.x));
    let path = route(p.x, x_end, &branch.roots, clearance);
    let mut y = p.y;
    let mut u = CVector3::zeros();
    for w in path.windows(2) {
        let (du, y_end) = integrate_segment(curve, &branch.roots, w[0], w[1], y)?;
        u += du;
        y = y_end;
    }
    Ok((u, CurvePoint { x: x_end, y, at_infinity: false }))
}

/// Polyline from `a` to `b` whose interior stays at least `clearance` away from every root;
/// obstacles are bypassed through a waypoint at distance `2 clearance` beside the root.
fn route(a: Complex64, b: Complex64, roots: &[Complex64], clearance: f64) -> Vec<Complex64> {
    fn go(a: Complex64, b: Complex64, roots: &[Complex64], clearance: f64, depth: usize, out: &mut Vec<Complex64>) {
        let d = b - a;
        let len = d.norm();
        let blocker = roots
            .iter()
            .filter_map(|&e| {
                let s = ((e - a) * d.conj()).re / (len * len);
                if s <= 0.0 || s >= 1.0 {
                    return None;
                }
                let dist = (e - (a + d * s)).norm();
                // roots next to an endpoint are not obstacles to the segment itself
                let near_end = (e - a).norm() < clearance || (e - b).norm() < clearance;
                (dist < clearance && !near_end).then_some((s, e))
            })
            .min_by(|x, y| x.0.total_cmp(&y.0));
        match blocker {
            Some((s, e)) if depth < 16 => {
                let foot = a + d * s;
                let side = if (e - foot).norm() > 1e-300 { (foot - e) / (foot - e).norm() } else { d * Complex64::i() / len };
                let waypoint = e + side * (2.0 * clearance);
                go(a, waypoint, roots, clearance, depth + 1, out);
                go(waypoint, b, roots, clearance, depth + 1, out);
            }
            _ => out.push(b),
        }
    }
    let mut out = vec![a];
    go(a, b, roots, clearance, 0, &mut out);
    out
}

/// Integral of `omega` along the straight segment `a -> b`, continuing `y` from `y_a`.
/// Panels are no longer than a quarter of the distance to the nearest root.
fn integrate_segment(
    curve: &Curve,
    roots: &[Complex64],
    a: Complex64,
    b: Complex64,
    y_a: Complex64,
) -> Result<(CVector3, Complex64)> {
    let nearest = |x: Complex64| roots.iter().map(|e| (e - x).norm()).fold(f64::INFINITY, f64::min);
    let len = (b - a).norm();
    let dir = if len > 0.0 { (b - a) / len } else { Complex64::new(0.0, 0.0) };
    let mut pos = 0.0;
    let mut y = y_a;
    let mut acc = CVector3::zeros();
    let mut panels = 0usize;
    while pos < len {
        let here = a + dir * pos;
        let d = nearest(here);
        if d < MIN_CLEARANCE || panels > 100_000 {
            return Err(Error::PathNearBranchPoint { clearance: d });
        }
        let h = (0.25 * d).min(len - pos);
        let start = here;
        let step = dir * h;
        let mut prev = y;
        let vals = composite_gl(1, |s| {
            let x = start + step * s;
            let cand = curve.f(x).sqrt();
            let yy = if (cand - prev).norm() <= (cand + prev).norm() { cand } else { -cand };
            prev = yy;
            let w = step / (2.0 * yy);
            [w, x * w, x * x * w]
        });
        // carry y to the panel end
        let end = start + step;
        let cand = curve.f(end).sqrt();
        y = if (cand - prev).norm() <= (cand + prev).norm() { cand } else { -cand };
        acc += CVector3::new(vals[0], vals[1], vals[2]);
        pos += h;
        panels += 1;
    }
    Ok((acc, y))
}

/// Sum of `u(P_i)`.
pub fn abel_jacobi_sum(points: &[CurvePoint], curve: &Curve, pd: &PeriodData) -> Result<JacobianPoint> {
    points.iter().try_fold(JacobianPoint::zero(), |acc, p| Ok(acc + abel_jacobi(p, curve, pd)?))
}

fn origin_check(ctx: &SigmaContext, d1: &[Complex64; 3]) -> Result<()> {
    let scale = d1.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if d1[1].norm() <= ctx.origin_tol() * scale || scale == 0.0 {
        return Err(Error::AtOrigin { value: d1[1].norm() });
    }
    Ok(())
}

/// `x(u) = -sigma_1(u) / sigma_2(u)` for `u` on the image of the curve.
pub fn x_of_u(u: &JacobianPoint, ctx: &SigmaContext) -> Result<Complex64> {
    let j = ctx.sigma_jet(&u.u, 1).jet;
    origin_check(ctx, &j.d1)?;
    Ok(-j.d1[0] / j.d1[1])
}

/// `y(u) = -sigma_3(2u) / (2 sigma_2(u)^4)` for `u` on the image of the curve.
pub fn y_of_u(u: &JacobianPoint, ctx: &SigmaContext) -> Result<Complex64> {
    let s = ctx.sigma_jet(&u.u, 1);
    origin_check(ctx, &s.jet.d1)?;
    let d = ctx.sigma_jet(&(u.u * Complex64::new(2.0, 0.0)), 1);
    let num = d.jet.d1[2] * (d.log_scale - 4.0 * s.log_scale).exp();
    Ok(-num / (2.0 * s.jet.d1[1].powi(4)))
}

/// Both coordinates; the curve point with Abel–Jacobi image `u`.
pub fn point_of_u(u: &JacobianPoint, ctx: &SigmaContext) -> Result<CurvePoint> {
    Ok(CurvePoint { x: x_of_u(u, ctx)?, y: y_of_u(u, ctx)?, at_infinity: false })
}

/// The `x`-coordinates of the three points with `u = u(P1) + u(P2) + u(P3)`: roots of
/// `x^3 - wp33 x^2 - wp23 x - wp13`.
pub fn jacobi_inversion(u: &JacobianPoint, ctx: &SigmaContext) -> Result<[Complex64; 3]> {
    let reduced = lattice_reduce(&u.u, &ctx.periods).u;
    let wp = ctx.wp_all(&reduced)?;
    let coeffs = [-wp.p2[0][2], -wp.p2[1][2], -wp.p2[2][2], Complex64::new(1.0, 0.0)];
    let r = polynomial_roots(&coeffs)?;
    Ok([r[0], r[1], r[2]])
}

/// Largest relative distance between two multisets of three values under the best matching.
pub fn multiset_distance(a: &[Complex64; 3], b: &[Complex64; 3]) -> f64 {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|p| (0..3).map(|k| (a[k] - b[p[k]]).norm() / b[p[k]].norm().max(1.0)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Deterministic pseudo-random finite point with `0.5 <= |x| <= 3 max|e|` (at least 2), at
/// distance at least `0.15 * min separation` from every branch point, on a random sheet.
pub fn random_curve_point(curve: &Curve, seed: u64) -> CurvePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_curve_point_with(curve, &mut rng)
}

pub fn random_curve_point_with(curve: &Curve, rng: &mut impl Rng) -> CurvePoint {
    let roots = curve.raw_roots();
    let mut sep = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            sep = sep.min((roots[i] - roots[j]).norm());
        }
    }
    let margin = 0.15 * sep;
    let outer = (3.0 * curve.max_root_modulus()).max(2.0);
    loop {
        let r = rng.gen_range(0.5..outer);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = Complex64::from_polar(r, phi);
        if roots.iter().all(|e| (e - x).norm() >= margin) {
            let sheet = if rng.gen_bool(0.5) { 1 } else { -1 };
            return curve.point_over(x, sheet);
        }
    }
}

/// `u(P)` for `P` with local parameter `t` near infinity, `y = -t^-7 + ...`.
pub fn abel_jacobi_near_infinity(curve: &Curve, t: Complex64) -> JacobianPoint {
    JacobianPoint::new(integral_near_infinity(curve, t))
}

/// `sigma_3(u) / sigma_2(u)`, which vanishes on the image of the curve.
pub fn sigma3_over_sigma2(u: &JacobianPoint, ctx: &SigmaContext) -> Complex64 {
    let j = ctx.sigma_jet(&u.u, 1).jet;
    j.d1[2] / j.d1[1]
}

/// `sigma(u)` relative to the size of its first derivatives times `|u|`, a scale-free
/// measure of how close `u` is to the theta divisor.
pub fn relative_sigma(u: &JacobianPoint, ctx: &SigmaContext) -> f64 {
    let j = ctx.sigma_jet(&u.u, 1).jet;
    let rho = u.u.norm().max(1e-3);
    let g = j.d1.iter().map(|c| c.norm()).fold(0.0, f64::max);
    j.v.norm() / (j.v.norm() + rho * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periods::compute_periods;
    use crate::Config;
    use std::sync::OnceLock;

    fn ctx() -> &'static SigmaContext {
        static CTX: OnceLock<SigmaContext> = OnceLock::new();
        CTX.get_or_init(|| {
            let cfg = Config::default();
            let curve = Curve::real_seven_roots();
            let pd = compute_periods(&curve, &cfg).unwrap();
            SigmaContext::new(&curve, &pd, &cfg).unwrap()
        })
    }

    fn close_mod_lattice(u: &CVector3, v: &CVector3, pd: &PeriodData, tol: f64) -> bool {
        lattice_reduce(&(u - v), pd).u.norm() < tol
    }

    #[test]
    fn infinity_maps_to_origin() {
        let c = ctx();
        assert_eq!(abel_jacobi(&CurvePoint::INFINITY, &c.curve, &c.periods).unwrap(), JacobianPoint::zero());
    }

    #[test]
    fn local_parameter_expansion() {
        let c = ctx();
        let t = Complex64::new(0.01, 0.004);
        let u = abel_jacobi_near_infinity(&c.curve, t).u;
        assert!((u[2] / t - 1.0).norm() < 1e-3);
        assert!((u[1] / (t.powi(3) / 3.0) - 1.0).norm() < 1e-3);
        assert!((u[0] / (t.powi(5) / 5.0) - 1.0).norm() < 1e-3);
        // the full path agrees with the series
        let p = c.curve.point_near_infinity(t, -1).unwrap();
        let v = abel_jacobi(&p, &c.curve, &c.periods).unwrap().u;
        assert!(close_mod_lattice(&u, &v, &c.periods, 1e-9));
    }

    #[test]
    fn involution_negates() {
        let c = ctx();
        for seed in 0..5 {
            let p = random_curve_point(&c.curve, seed);
            let a = abel_jacobi(&p, &c.curve, &c.periods).unwrap().u;
            let b = abel_jacobi(&p.conjugate(), &c.curve, &c.periods).unwrap().u;
            assert!(close_mod_lattice(&a, &(-b), &c.periods, 1e-8));
        }
    }

    #[test]
    fn round_trip_through_sigma_quotients() {
        let c = ctx();
        for seed in 10..16 {
            let p = random_curve_point(&c.curve, seed);
            let u = abel_jacobi(&p, &c.curve, &c.periods).unwrap();
            let u = JacobianPoint::new(u.reduce(&c.periods).u);
            let x = x_of_u(&u, c).unwrap();
            let y = y_of_u(&u, c).unwrap();
            assert!((x - p.x).norm() <= 1e-6 * p.x.norm(), "{x} vs {}", p.x);
            assert!((y - p.y).norm() <= 1e-6 * p.y.norm(), "{y} vs {}", p.y);
            assert!(sigma3_over_sigma2(&u, c).norm() < 1e-6 * p.x.norm());
        }
    }

    #[test]
    fn inversion_recovers_three_points() {
        let c = ctx();
        let pts: Vec<CurvePoint> = (20..23).map(|s| random_curve_point(&c.curve, s)).collect();
        let u = abel_jacobi_sum(&pts, &c.curve, &c.periods).unwrap();
        let xs = jacobi_inversion(&u, c).unwrap();
        let want = [pts[0].x, pts[1].x, pts[2].x];
        assert!(multiset_distance(&xs, &want) < 1e-6, "{xs:?} vs {want:?}");
    }

    #[test]
    fn random_points_are_reproducible_and_on_curve() {
        let c = ctx();
        let a = random_curve_point(&c.curve, 7);
        assert_eq!(a, random_curve_point(&c.curve, 7));
        assert!(c.curve.is_on_curve(&a, 1e-10));
    }

    #[test]
    fn routes_avoid_branch_points() {
        let roots = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let path = route(Complex64::new(-2.0, 0.0), Complex64::new(3.0, 0.0), &roots, 0.1);
        assert!(path.len() > 2);
        for w in path.windows(2) {
            for e in roots {
                let d = crate::periods::segment_distance(e, w[0], w[1]);
                assert!(d >= 0.1 - 1e-12);
            }
        }
    }
}
