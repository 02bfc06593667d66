//! Branch points, a symplectic homology basis, the period matrices of the first and
//! second kind, and reduction modulo the period lattice.
//!
//! Homology is generated by loops `gamma_k` around the segments `[e_k, e_{k+1}]` of the
//! polyline through the branch points sorted by real part. Such a polyline never crosses
//! itself, so only consecutive loops meet, each pair exactly once. With the signs
//! `s_k` normalised so that every consecutive intersection number is `+1`,
//!
//! ```text
//! alpha_i = s_{2i-1} gamma_{2i-1},   beta_i = sum_{k >= i} s_{2k} gamma_{2k}
//! ```
//!
//! is symplectic. The intersection signs are not computed combinatorially: among the
//! 32 sign patterns exactly one makes `Z = omega'^-1 omega''` symmetric with positive
//! definite imaginary part, and that one is selected.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::curve::Curve;
use crate::quadrature::endpoint_singular;
use crate::roots::horner_with_derivative;
use crate::{Error, Result};

pub type CMatrix3 = Matrix3<Complex64>;
pub type CVector3 = Vector3<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchData {
    /// Roots of `f`, sorted by real part then imaginary part.
    pub roots: Vec<Complex64>,
}

impl BranchData {
    pub fn min_separation(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                d = d.min((self.roots[i] - self.roots[j]).norm());
            }
        }
        d
    }

    pub fn distance_to_nearest(&self, x: Complex64) -> f64 {
        self.roots.iter().map(|r| (r - x).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Roots of `f`, polished and sorted canonically.
pub fn branch_points(curve: &Curve) -> Result<BranchData> {
    let coeffs = curve.lambda();
    let scale = curve.max_root_modulus().max(1.0);
    let mut roots: Vec<Complex64> = curve
        .raw_roots()
        .iter()
        .map(|&r0| {
            let mut r = r0;
            for _ in 0..3 {
                let (p, dp) = horner_with_derivative(coeffs, r);
                let step = p / dp;
                if step.is_finite() {
                    r -= step;
                }
            }
            r
        })
        .collect();
    for r in &roots {
        let residual = curve.f(*r).norm();
        if residual > 1e-10 * scale.powi(7) {
            return Err(Error::RootFindFailure { residual });
        }
    }
    // real parts that agree to rounding are treated as equal so that conjugate pairs
    // sort by imaginary part
    let tie = 1e-9 * scale;
    roots.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && (roots[j].re - roots[i].re).abs() <= tie {
            j += 1;
        }
        roots[i..j].sort_by(|a, b| a.im.total_cmp(&b.im));
        i = j;
    }
    Ok(BranchData { roots })
}

/// The homology basis, stored as the chain of root pairs and the sign pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub roots: Vec<Complex64>,
    /// `segments[k] = (k, k + 1)`: loop `gamma_{k+1}` encircles this pair of roots.
    pub segments: Vec<(usize, usize)>,
    /// Orientation `s_k` of each loop; all `+1` until resolved by [`period_matrices`].
    pub orientation: [i8; 6],
}

impl CycleSpec {
    /// Loop coefficients of `alpha_i` (first three) and `beta_i` (last three).
    pub fn basis_coefficients(&self) -> [[i8; 6]; 6] {
        let mut out = [[0i8; 6]; 6];
        for i in 0..3 {
            out[i][2 * i] = self.orientation[2 * i];
            for k in i..3 {
                out[3 + i][2 * k + 1] = self.orientation[2 * k + 1];
            }
        }
        out
    }
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

pub fn build_cycles(branch: &BranchData) -> Result<CycleSpec> {
    let roots = branch.roots.clone();
    if roots.len() != 7 {
        return Err(Error::DegenerateGeometry(format!("expected 7 branch points, got {}", roots.len())));
    }
    let segments: Vec<(usize, usize)> = (0..6).map(|k| (k, k + 1)).collect();
    let sep = branch.min_separation();
    for (k, &(a, b)) in segments.iter().enumerate() {
        for (m, r) in roots.iter().enumerate() {
            if m != a && m != b && segment_distance(*r, roots[a], roots[b]) < 1e-6 * sep {
                return Err(Error::DegenerateGeometry(format!("branch point {m} lies on segment {k}")));
            }
        }
        for &(c, d) in segments.iter().skip(k + 2) {
            if segments_intersect(roots[a], roots[b], roots[c], roots[d]) {
                return Err(Error::DegenerateGeometry(format!("segments {k} and {c} cross")));
            }
        }
    }
    Ok(CycleSpec { roots, segments, orientation: [1; 6] })
}

/// Numerators of the six differentials `h(x) dx / 2y`: `omega^(1..3)` then `eta^(1..3)`.
pub fn differential_numerators(curve: &Curve, x: Complex64) -> [Complex64; 6] {
    let l = curve.lambda();
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    let x5 = x4 * x;
    [
        Complex64::new(1.0, 0.0),
        x,
        x2,
        l[3] * x + 2.0 * l[4] * x2 + 3.0 * l[5] * x3 + 4.0 * l[6] * x4 + 5.0 * l[7] * x5,
        l[5] * x2 + 2.0 * l[6] * x3 + 3.0 * l[7] * x4,
        x3,
    ]
}

/// Continuous square root of `prod (x - e_m)` along the segment `[a, b]`, for roots
/// `e_m` off the segment: each factor is rotated so that its image avoids the branch
/// cut of the principal square root.
#[derive(Clone, Debug)]
pub struct SegmentRoot {
    factors: Vec<(Complex64, Complex64, Complex64)>,
}

impl SegmentRoot {
    pub fn new(a: Complex64, b: Complex64, others: impl IntoIterator<Item = Complex64>) -> Self {
        let mid = 0.5 * (a + b);
        let factors = others
            .into_iter()
            .map(|e| {
                let d = mid - e;
                let w = d.conj() / d.norm();
                (e, w, w.sqrt())
            })
            .collect();
        Self { factors }
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.factors.iter().map(|&(e, w, sw)| ((x - e) * w).sqrt() / sw).product()
    }
}

/// The six integrals over `gamma_k` for the segment between roots `a` and `b`.
fn loop_integrals(curve: &Curve, roots: &[Complex64], a: usize, b: usize, tol: f64) -> Result<[Complex64; 6]> {
    let (ea, eb) = (roots[a], roots[b]);
    let mid = 0.5 * (ea + eb);
    let half = 0.5 * (eb - ea);
    let root = SegmentRoot::new(ea, eb, roots.iter().enumerate().filter(|&(m, _)| m != a && m != b).map(|(_, &r)| r));
    let i = Complex64::new(0.0, 1.0);
    // loop integral = 2 * int_a^b h dx / 2y with y = i * half * sqrt(1 - s^2) * G(x)
    endpoint_singular(tol, |s| {
        let x = mid + half * s;
        let inv = 1.0 / (i * root.eval(x));
        differential_numerators(curve, x).map(|h| h * inv)
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodData {
    #[serde(with = "matrix_rows")]
    pub omega1: CMatrix3,
    #[serde(with = "matrix_rows")]
    pub omega2: CMatrix3,
    #[serde(with = "matrix_rows")]
    pub eta1: CMatrix3,
    #[serde(with = "matrix_rows")]
    pub eta2: CMatrix3,
    #[serde(rename = "Z", with = "matrix_rows")]
    pub z: CMatrix3,
    pub quad_tol: f64,
    pub curve_hash: String,
    #[serde(default)]
    pub orientation: Option<[i8; 6]>,
}

/// Serde adapter writing a complex 3x3 matrix as rows of `[re, im]` pairs.
pub mod matrix_rows {
    use super::CMatrix3;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix3, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..3).map(|r| (0..3).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix3, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
            return Err(serde::de::Error::custom("expected a 3x3 matrix"));
        }
        Ok(CMatrix3::from_fn(|r, c| Complex64::new(rows[r][c][0], rows[r][c][1])))
    }
}

/// Symmetry defect `|Z - Z^T| / |Z|` and smallest eigenvalue of `Im Z`.
pub fn riemann_diagnostics(z: &CMatrix3) -> (f64, f64) {
    let defect = (z - z.transpose()).norm() / z.norm();
    let y = z.map(|c| c.im);
    let sym = (y + y.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    (defect, eig.min())
}

fn condition_number(m: &CMatrix3) -> Option<f64> {
    m.try_inverse().map(|inv| m.norm() * inv.norm())
}

pub fn period_matrices(curve: &Curve, cycles: &CycleSpec, config: &Config) -> Result<(PeriodData, CycleSpec)> {
    let tol = config.quad_tol;
    let gamma: Vec<[Complex64; 6]> = cycles
        .segments
        .par_iter()
        .map(|&(a, b)| loop_integrals(curve, &cycles.roots, a, b, tol))
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64, PeriodData, CycleSpec)> = None;
    for pattern in 0u32..32 {
        let mut orientation = [1i8; 6];
        for (k, o) in orientation.iter_mut().enumerate().skip(1) {
            if pattern >> (k - 1) & 1 == 1 {
                *o = -1;
            }
        }
        let spec = CycleSpec { orientation, ..cycles.clone() };
        let coeffs = spec.basis_coefficients();
        let mut mats = [CMatrix3::zeros(); 4];
        for (c, row) in coeffs.iter().enumerate() {
            let (first_kind, second_kind, col) = if c < 3 { (0, 2, c) } else { (1, 3, c - 3) };
            for (k, &s) in row.iter().enumerate() {
                if s == 0 {
                    continue;
                }
                for j in 0..3 {
                    mats[first_kind][(j, col)] += gamma[k][j] * f64::from(s);
                    mats[second_kind][(j, col)] += gamma[k][3 + j] * f64::from(s);
                }
            }
        }
        let [omega1, omega2, eta1, eta2] = mats;
        let Some(inv) = omega1.try_inverse() else { continue };
        let z = inv * omega2;
        let (defect, min_eig) = riemann_diagnostics(&z);
        if min_eig <= 0.0 {
            continue;
        }
        if best.as_ref().is_none_or(|b| defect < b.0) {
            let pd = PeriodData {
                omega1,
                omega2,
                eta1,
                eta2,
                z,
                quad_tol: tol,
                curve_hash: curve.hash_hex(),
                orientation: Some(orientation),
            };
            best = Some((defect, min_eig, pd, spec));
        }
    }
    let (defect, _, pd, spec) =
        best.ok_or_else(|| Error::InvalidPeriods("no orientation gives Im Z positive definite".into()))?;
    if defect > config.sym_tol {
        return Err(Error::InvalidPeriods(format!("Riemann matrix symmetry defect {defect:.3e}")));
    }
    riemann_matrix(&pd, config)?;
    Ok((pd, spec))
}

/// `Z = omega'^-1 omega''`, with the Riemann relations checked.
pub fn riemann_matrix(pd: &PeriodData, config: &Config) -> Result<CMatrix3> {
    let cond = condition_number(&pd.omega1).unwrap_or(f64::INFINITY);
    if cond > config.max_omega_cond {
        return Err(Error::IllConditionedOmega { cond });
    }
    let z = pd.omega1.try_inverse().expect("checked above") * pd.omega2;
    let (defect, min_eig) = riemann_diagnostics(&z);
    if defect > config.sym_tol {
        return Err(Error::InvalidPeriods(format!("Z symmetry defect {defect:.3e}")));
    }
    if min_eig <= 0.0 {
        return Err(Error::InvalidPeriods(format!("Im Z not positive definite (min eigenvalue {min_eig:.3e})")));
    }
    Ok(z)
}

/// Periods of a curve, computed from scratch.
pub fn compute_periods(curve: &Curve, config: &Config) -> Result<PeriodData> {
    let branch = branch_points(curve)?;
    let cycles = build_cycles(&branch)?;
    Ok(period_matrices(curve, &cycles, config)?.0)
}

impl PeriodData {
    pub fn omega1_inv(&self) -> CMatrix3 {
        self.omega1.try_inverse().expect("omega' invertible")
    }

    /// Lattice vector `omega' a + omega'' b`.
    pub fn lattice_point(&self, a: [i64; 3], b: [i64; 3]) -> CVector3 {
        let av = CVector3::from_iterator(a.iter().map(|&v| Complex64::new(v as f64, 0.0)));
        let bv = CVector3::from_iterator(b.iter().map(|&v| Complex64::new(v as f64, 0.0)));
        self.omega1 * av + self.omega2 * bv
    }

    /// Real coordinates of `u` in the basis given by the columns of `omega'` and `omega''`.
    pub fn real_coordinates(&self, u: &CVector3) -> Vector6<f64> {
        let mut m = Matrix6::<f64>::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = self.omega1[(r, c)].re;
                m[(r, c + 3)] = self.omega2[(r, c)].re;
                m[(r + 3, c)] = self.omega1[(r, c)].im;
                m[(r + 3, c + 3)] = self.omega2[(r, c)].im;
            }
        }
        let rhs = Vector6::new(u[0].re, u[1].re, u[2].re, u[0].im, u[1].im, u[2].im);
        m.lu().solve(&rhs).expect("period lattice is non-degenerate")
    }

    /// Generalized Legendre relation diagnostic: `M J M^T` for `M = [[w', w''], [n', n'']]`.
    pub fn legendre_matrix(&self) -> nalgebra::Matrix6<Complex64> {
        let mut m = nalgebra::Matrix6::<Complex64>::zeros();
        let mut j = nalgebra::Matrix6::<Complex64>::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = self.omega1[(r, c)];
                m[(r, c + 3)] = self.omega2[(r, c)];
                m[(r + 3, c)] = self.eta1[(r, c)];
                m[(r + 3, c + 3)] = self.eta2[(r, c)];
            }
            j[(r, r + 3)] = Complex64::new(1.0, 0.0);
            j[(r + 3, r)] = Complex64::new(-1.0, 0.0);
        }
        m * j * m.transpose()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Reduction modulo the period lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduced {
    pub u: CVector3,
    pub a: [i64; 3],
    pub b: [i64; 3],
}

/// `u = u_reduced + omega' a + omega'' b` with the real coordinates of `u_reduced` in `[-1/2, 1/2)`.
pub fn lattice_reduce(u: &CVector3, pd: &PeriodData) -> Reduced {
    let c = pd.real_coordinates(u);
    let n: Vec<i64> = c.iter().map(|v| (v + 0.5).floor() as i64).collect();
    let a = [n[0], n[1], n[2]];
    let b = [n[3], n[4], n[5]];
    Reduced { u: u - pd.lattice_point(a, b), a, b }
}

/// Directory for cached period files: `$SIGMA3_CACHE_DIR`, or the system temp dir.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("SIGMA3_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sigma3-cache"))
}

/// Load cached periods for this curve and quadrature tolerance, or compute and store them.
pub fn load_or_compute(curve: &Curve, config: &Config, dir: Option<&Path>) -> Result<PeriodData> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(cache_dir);
    let hash = curve.hash_hex();
    let path = dir.join(format!("periods-{}-{:e}.json", &hash[..16], config.quad_tol));
    if let Ok(pd) = PeriodData::load(&path) {
        if pd.curve_hash == hash && pd.quad_tol == config.quad_tol && riemann_matrix(&pd, config).is_ok() {
            return Ok(pd);
        }
    }
    let pd = compute_periods(curve, config)?;
    if std::fs::create_dir_all(&dir).is_ok() {
        // the cache is an optimization; failing to write it is not an error
        let _ = pd.save(&path);
    }
    Ok(pd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_points_of_stock_curves() {
        let b = branch_points(&Curve::real_seven_roots()).unwrap();
        for (r, want) in b.roots.iter().zip([-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]) {
            assert!((r - Complex64::new(want, 0.0)).norm() < 1e-13);
        }
        let b = branch_points(&Curve::x7_plus_1()).unwrap();
        for k in 0..7 {
            let r = Complex64::from_polar(1.0, std::f64::consts::PI * (2 * k + 1) as f64 / 7.0);
            assert!(b.distance_to_nearest(r) < 1e-13);
        }
        // conjugate pairs are ordered by imaginary part
        assert!((b.roots[0] + 1.0).norm() < 1e-13);
        assert!(b.roots[1].im < 0.0 && b.roots[2].im > 0.0);
    }

    #[test]
    fn cycles_are_canonical() {
        let b = branch_points(&Curve::x7_plus_1()).unwrap();
        let mut shuffled = b.clone();
        shuffled.roots.reverse();
        shuffled.roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let c1 = build_cycles(&b).unwrap();
        assert_eq!(c1.segments, (0..6).map(|k| (k, k + 1)).collect::<Vec<_>>());
        let coeffs = c1.basis_coefficients();
        assert_eq!(coeffs[0], [1, 0, 0, 0, 0, 0]);
        assert_eq!(coeffs[3], [0, 1, 0, 1, 0, 1]);
        assert_eq!(coeffs[5], [0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn collinear_root_on_segment_is_rejected() {
        let roots = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(4.0, -1.0),
            Complex64::new(4.0, 1.0),
            Complex64::new(4.0, 0.0),
        ];
        assert!(matches!(build_cycles(&BranchData { roots }), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn segment_root_is_continuous_and_squares_correctly() {
        let a = Complex64::new(-1.0, 0.3);
        let b = Complex64::new(1.5, -0.2);
        let others = [Complex64::new(0.0, 1.0), Complex64::new(0.2, -0.1 - 1.0), Complex64::new(-3.0, 0.0)];
        let g = SegmentRoot::new(a, b, others);
        let mut prev = g.eval(a);
        for k in 1..=1000 {
            let x = a + (b - a) * (k as f64 / 1000.0);
            let v = g.eval(x);
            let want: Complex64 = others.iter().map(|e| x - e).product();
            assert!((v * v - want).norm() < 1e-12 * want.norm());
            assert!((v - prev).norm() < 0.05 * v.norm(), "jump at {x}");
            prev = v;
        }
    }

    #[test]
    fn lattice_reduction_basics() {
        let pd = compute_periods(&Curve::x7_plus_1(), &Config::default()).unwrap();
        let l = pd.lattice_point([1, 0, 0], [0, 0, 0]);
        let r = lattice_reduce(&l, &pd);
        assert!(r.u.norm() < 1e-12 * l.norm());
        assert_eq!((r.a, r.b), ([1, 0, 0], [0, 0, 0]));
        let u = pd.lattice_point([0, 0, 0], [0, 0, 0]) + pd.omega1.column(1) * Complex64::new(0.2, 0.0) + pd.omega2.column(2) * Complex64::new(-0.3, 0.0);
        let r = lattice_reduce(&u, &pd);
        assert!((r.u - u).norm() < 1e-14);
        let shifted = u + pd.lattice_point([2, -1, 0], [0, 3, -1]);
        let r2 = lattice_reduce(&shifted, &pd);
        assert!((r2.u - u).norm() < 1e-10);
        assert_eq!((r2.a, r2.b), ([2, -1, 0], [0, 3, -1]));
    }
}
