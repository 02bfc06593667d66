use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::kiepert::{psi_symbolic, KiepertMatrix};
use super::report::{IdentityResidual, SectionReport, VerificationReport};
use super::{fs_determinant, fs_sigma_side, psi_numeric};
use crate::abel_jacobi::{
    abel_jacobi, abel_jacobi_near_infinity, integrate_from, jacobi_inversion, multiset_distance, random_curve_point_with,
    relative_sigma, x_of_u, y_of_u, JacobianPoint,
};
use crate::periods::{lattice_reduce, riemann_diagnostics, CVector3};
use crate::sigma::{MultiIndex, SigmaContext};
use crate::{Config, CurvePoint, Error, Result};

const MAX_RETRIES: usize = 10;

/// Independent, reproducible generator for one trial of one check.
pub fn trial_rng(seed: u64, salt: &str, trial: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(salt.as_bytes());
    h.update((trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// A random finite curve point together with its reduced Abel–Jacobi image.
#[derive(Clone, Copy, Debug)]
pub struct SampledPoint {
    pub p: CurvePoint,
    pub u: JacobianPoint,
}

pub fn sample_point(ctx: &SigmaContext, rng: &mut impl Rng) -> Result<SampledPoint> {
    let p = random_curve_point_with(&ctx.curve, rng);
    let u = abel_jacobi(&p, &ctx.curve, &ctx.periods)?;
    Ok(SampledPoint { p, u: JacobianPoint::new(lattice_reduce(&u.u, &ctx.periods).u) })
}

fn sample_points(ctx: &SigmaContext, rng: &mut impl Rng, count: usize) -> Result<Vec<SampledPoint>> {
    (0..count).map(|_| sample_point(ctx, rng)).collect()
}

/// Run `body` on fresh generators until it succeeds, at most `MAX_RETRIES` times; only
/// configuration-type failures are retried.
fn with_retries<T>(seed: u64, salt: &str, trial: usize, body: impl Fn(&mut ChaCha8Rng) -> Result<T>) -> Result<T> {
    let mut last = None;
    for retry in 0..MAX_RETRIES {
        let mut rng = trial_rng(seed, &format!("{salt}/{retry}"), trial);
        match body(&mut rng) {
            Ok(v) => return Ok(v),
            Err(
                e @ (Error::DegenerateConfiguration(_)
                | Error::AtOrigin { .. }
                | Error::OnThetaDivisor { .. }
                | Error::PathNearBranchPoint { .. }),
            ) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn collect_section(name: &str, tol: f64, samples: Result<Vec<IdentityResidual>>) -> SectionReport {
    match samples {
        Ok(s) => SectionReport::from_samples(name, tol, s),
        Err(e) => SectionReport::failed(name, tol, format!("evaluation failed: {e}")),
    }
}

fn xs(points: &[SampledPoint]) -> Vec<Complex64> {
    points.iter().map(|s| s.p.x).collect()
}

/// Both sides of the generalized Frobenius–Stickelberger formula on `trials` random
/// `(n+1)`-tuples of curve points. For `n >= 2` a second section compares the sigma side
/// with the determinant times [`fs_sign`].
pub fn verify_frobenius_stickelberger(
    n: usize,
    trials: usize,
    seed: u64,
    ctx: &SigmaContext,
    tol: f64,
) -> Vec<SectionReport> {
    let name = format!("frobenius_stickelberger_n{n}");
    let rows: Result<Vec<(Vec<Complex64>, Complex64, Complex64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            with_retries(seed, &name, trial, |rng| {
                let pts = sample_points(ctx, rng, n + 1)?;
                let us: Vec<JacobianPoint> = pts.iter().map(|s| s.u).collect();
                Ok((xs(&pts), fs_sigma_side(&us, ctx)?, fs_determinant(&us, ctx)?))
            })
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return vec![SectionReport::failed(&name, tol, format!("evaluation failed: {e}"))],
    };
    let section = |label: &str, sign: f64| {
        let samples = rows
            .iter()
            .enumerate()
            .map(|(t, (x, lhs, rhs))| IdentityResidual::new(label, t, x.clone(), *lhs, rhs * sign))
            .collect();
        SectionReport::from_samples(label, tol, samples)
    };
    let mut out = vec![section(&name, 1.0)];
    if n >= 2 {
        let sign = fs_sign(n);
        out.push(
            section(&format!("frobenius_stickelberger_signed_n{n}"), sign)
                .with_note(format!("determinant multiplied by (-1)^(n(n+1)/2) = {sign}")),
        );
    }
    out
}

/// `(-1)^(n(n+1)/2)`: the sign relating the sigma side, with the product over `i < j` of
/// `sigma_3(u_i - u_j)`, to the determinant with rows `u_0, ..., u_n` for `n >= 2`.
pub fn fs_sign(n: usize) -> f64 {
    if (n * (n + 1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `psi_n` by the derivative determinant (for each `j`) against the sigma quotient, and the
/// determinants for different `j` against each other, on the same random points.
pub fn verify_kiepert(n: usize, js: &[usize], trials: usize, seed: u64, ctx: &SigmaContext, tol: f64) -> Vec<SectionReport> {
    let mats: Result<Vec<KiepertMatrix>> = js.iter().map(|&j| KiepertMatrix::new(n, j, &ctx.curve)).collect();
    let mats = match mats {
        Ok(m) => m,
        Err(e) => return vec![SectionReport::failed(&format!("kiepert_n{n}"), tol, e.to_string())],
    };
    let salt = format!("kiepert_n{n}");
    let rows: Result<Vec<(SampledPoint, Complex64, Vec<Complex64>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            with_retries(seed, &salt, trial, |rng| {
                let s = sample_point(ctx, rng)?;
                let x = x_of_u(&s.u, ctx)?;
                let y = y_of_u(&s.u, ctx)?;
                let numeric = psi_numeric(&s.u, n, ctx)?;
                let dets = mats.iter().map(|m| m.eval(x, y)).collect::<Result<Vec<_>>>()?;
                Ok((s, numeric, dets))
            })
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return vec![SectionReport::failed(&salt, tol, format!("evaluation failed: {e}"))],
    };
    let mut out = Vec::new();
    for (k, &j) in js.iter().enumerate() {
        let name = format!("kiepert_n{n}_j{j}");
        let samples = rows
            .iter()
            .enumerate()
            .map(|(t, (s, num, dets))| IdentityResidual::new(&name, t, vec![s.p.x], dets[k], *num))
            .collect();
        out.push(SectionReport::from_samples(&name, tol, samples));
    }
    for a in 0..js.len() {
        for b in a + 1..js.len() {
            let name = format!("kiepert_n{n}_j{}_vs_j{}", js[a], js[b]);
            let samples = rows
                .iter()
                .enumerate()
                .map(|(t, (s, _, dets))| IdentityResidual::new(&name, t, vec![s.p.x], dets[a], dets[b]))
                .collect();
            out.push(SectionReport::from_samples(&name, tol, samples));
        }
    }
    out
}

/// Outcome of a limit check `sigma_3(u - v) / (u_j - v_j) -> 1 / x(v)^(j-1)`.
#[derive(Clone, Debug)]
pub struct LimitReport {
    pub section: SectionReport,
    /// Per trial: `log10(res(coarse) / res(fine))`.
    pub orders: Vec<f64>,
    pub coarse_residuals: Vec<f64>,
    pub fine_residuals: Vec<f64>,
    /// Residuals of the first-order Richardson extrapolation from both steps.
    pub extrapolated_residuals: Vec<f64>,
}

/// Steps in `x` used for the limit checks.
pub const LIMIT_STEPS: (f64, f64) = (1e-2, 1e-3);

/// `u -> v` along the curve with `x(u) = x(v) + h e^{i phi}` for `h` in [`LIMIT_STEPS`];
/// residuals are relative to the limit `1 / x(v)^(j-1)`.
pub fn verify_limit_ratio(
    j: usize,
    trials: usize,
    seed: u64,
    ctx: &SigmaContext,
    tol: f64,
    order_range: (f64, f64),
) -> LimitReport {
    let name = format!("limit_ratio_j{j}");
    let rows: Result<Vec<(Complex64, Complex64, Complex64, Complex64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            with_retries(seed, &name, trial, |rng| {
                let s = sample_point(ctx, rng)?;
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let ratio = |h: f64| -> Result<Complex64> {
                    let (delta, _) = integrate_from(&s.p, s.p.x + Complex64::from_polar(h, phase), &ctx.curve)?;
                    let s3 = ctx.sigma(&delta, MultiIndex::from_indices(&[3])?);
                    Ok(s3 / delta[j - 1])
                };
                let limit = 1.0 / s.p.x.powi(j as i32 - 1);
                Ok((s.p.x, limit, ratio(LIMIT_STEPS.0)?, ratio(LIMIT_STEPS.1)?))
            })
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => {
            return LimitReport {
                section: SectionReport::failed(&name, tol, format!("evaluation failed: {e}")),
                orders: vec![],
                coarse_residuals: vec![],
                fine_residuals: vec![],
                extrapolated_residuals: vec![],
            }
        }
    };
    let rel = |a: Complex64, l: Complex64| (a - l).norm() / l.norm();
    let ratio_of_steps = LIMIT_STEPS.0 / LIMIT_STEPS.1;
    let coarse: Vec<f64> = rows.iter().map(|r| rel(r.2, r.1)).collect();
    let fine: Vec<f64> = rows.iter().map(|r| rel(r.3, r.1)).collect();
    let orders: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (c / f).ln() / ratio_of_steps.ln()).collect();
    let extrapolated: Vec<f64> = rows
        .iter()
        .map(|r| rel((ratio_of_steps * r.3 - r.2) / (ratio_of_steps - 1.0), r.1))
        .collect();
    let samples = rows
        .iter()
        .enumerate()
        .map(|(t, r)| IdentityResidual::with_floor(&name, t, r.3, r.1, r.1.norm()))
        .collect();
    let (lo, hi) = orders.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &o| (a.min(o), b.max(o)));
    let max_ex = extrapolated.iter().copied().fold(0.0, f64::max);
    let section = SectionReport::from_samples(&name, tol, samples)
        .with_note(format!(
            "steps {:e}, {:e}; empirical order in [{lo:.3}, {hi:.3}]; max residual after extrapolation {max_ex:.2e}",
            LIMIT_STEPS.0, LIMIT_STEPS.1
        ))
        .require(
            lo >= order_range.0 && hi <= order_range.1,
            format!("order outside [{}, {}]", order_range.0, order_range.1),
        );
    LimitReport { section, orders, coarse_residuals: coarse, fine_residuals: fine, extrapolated_residuals: extrapolated }
}

/// Random point of a fundamental domain of the period lattice.
fn random_cell_point(ctx: &SigmaContext, rng: &mut impl Rng) -> CVector3 {
    let mut c = [0.0; 6];
    for v in &mut c {
        *v = rng.gen_range(-0.5..0.5);
    }
    let re = |v: f64| Complex64::new(v, 0.0);
    ctx.periods.omega1 * CVector3::new(re(c[0]), re(c[1]), re(c[2]))
        + ctx.periods.omega2 * CVector3::new(re(c[3]), re(c[4]), re(c[5]))
}

fn floor_residual(name: &str, trial: usize, got: Complex64, want: Complex64) -> IdentityResidual {
    IdentityResidual::with_floor(name, trial, got, want, 1.0)
}

fn riemann_section(ctx: &SigmaContext, config: &Config) -> SectionReport {
    let (defect, min_eig) = riemann_diagnostics(&ctx.periods.z);
    let name = "riemann_relations";
    let sample = IdentityResidual::with_floor(name, 0, Complex64::new(defect, 0.0), Complex64::new(0.0, 0.0), 1.0);
    SectionReport::from_samples(name, config.sym_tol, vec![sample])
        .with_note(format!("min eigenvalue of Im Z {min_eig:.6}"))
        .require(min_eig > 0.0, "Im Z not positive definite")
}

fn normalization_section(ctx: &SigmaContext) -> SectionReport {
    let zero = CVector3::zeros();
    let name = "normalization";
    let d = |i: &[usize]| ctx.sigma(&zero, MultiIndex::from_indices(i).expect("valid index"));
    let one = Complex64::new(1.0, 0.0);
    let samples = vec![
        floor_residual(name, 0, d(&[1, 3]), one),
        floor_residual(name, 1, d(&[2, 2]), -2.0 * one),
        floor_residual(name, 2, d(&[]), Complex64::default()),
    ];
    SectionReport::from_samples(name, 1e-6, samples).with_note(format!(
        "characteristic delta' {:?}, delta'' {:?}; reference accepted: {}; passing candidates: {}",
        ctx.characteristics.delta1,
        ctx.characteristics.delta2,
        ctx.choice.reference_accepted,
        ctx.choice.candidates_passing
    ))
}

/// Degree-4 and degree-6 coefficients of the expansion at the origin; residuals are
/// relative to `max(|expected|, 1)` since several expected values vanish.
fn taylor_section(ctx: &SigmaContext) -> SectionReport {
    let l = ctx.curve.lambda();
    let name = "taylor_coefficients";
    let cases = [
        ([4, 0, 0], -l[0] / 3.0),
        ([3, 1, 0], -l[1] / 3.0),
        ([0, 4, 0], -l[4] / 3.0),
        ([0, 2, 2], -l[6] / 2.0),
        ([0, 0, 6], l[7] / 45.0),
    ];
    let samples = cases
        .par_iter()
        .enumerate()
        .map(|(t, (p, want))| floor_residual(name, t, ctx.taylor_coefficient(*p, 0.2, 16), *want))
        .collect();
    SectionReport::from_samples(name, 1e-3, samples).with_note("Cauchy integral on a torus of radius 0.2, 16 nodes per variable")
}

fn parity_section(ctx: &SigmaContext, seed: u64) -> SectionReport {
    let name = "parity";
    let d2 = MultiIndex::from_indices(&[2]).expect("valid index");
    let samples: Vec<IdentityResidual> = (0..100)
        .into_par_iter()
        .flat_map_iter(|t| {
            let u = random_cell_point(ctx, &mut trial_rng(seed, name, t));
            [
                IdentityResidual::new("sigma_even", t, u.iter().copied().collect(), ctx.sigma(&(-u), MultiIndex::ZERO), ctx.sigma(&u, MultiIndex::ZERO)),
                IdentityResidual::new("sigma_2_odd", t, vec![], -ctx.sigma(&(-u), d2), ctx.sigma(&u, d2)),
            ]
        })
        .collect();
    SectionReport::from_samples(name, 1e-8, samples)
}

fn quasi_periodicity_section(ctx: &SigmaContext, seed: u64) -> SectionReport {
    let name = "quasi_periodicity";
    let mut gens = Vec::new();
    for k in 0..3 {
        let mut e = [0i64; 3];
        e[k] = 1;
        gens.push((e, [0; 3]));
        gens.push(([0; 3], e));
    }
    let samples: Result<Vec<IdentityResidual>> = gens
        .par_iter()
        .enumerate()
        .flat_map_iter(|(g, (a, b))| {
            (0..10).map(move |t| {
                let u = random_cell_point(ctx, &mut trial_rng(seed, name, g * 10 + t));
                let (chi, _) = ctx.quasi_period_factor(&u, *a, *b)?;
                let ratio = ctx.translation_ratio(&u, *a, *b);
                Ok(IdentityResidual::new(name, g * 10 + t, vec![], ratio, Complex64::new(f64::from(chi), 0.0)))
            })
        })
        .collect();
    collect_section(name, 1e-6, samples).with_note("factor exp L(u + l/2, l) with L(u, l) = -u^T (eta' a + eta'' b)")
}

/// Expansions in the local parameter at infinity: `u1 / (t^5/5)`, `u2 / (t^3/3)` and
/// `x t^2` at `|t| = 1e-3`, `-y t^7` at `|t| = 1e-2`.
fn infinity_section(ctx: &SigmaContext) -> SectionReport {
    let name = "expansion_at_infinity";
    let one = Complex64::new(1.0, 0.0);
    let samples: Result<Vec<IdentityResidual>> = [0.3, 1.1, 2.0]
        .iter()
        .enumerate()
        .flat_map(|(k, &phase)| {
            let t3 = Complex64::from_polar(1e-3, phase);
            let t2 = Complex64::from_polar(1e-2, phase);
            let u3 = abel_jacobi_near_infinity(&ctx.curve, t3);
            let u2 = abel_jacobi_near_infinity(&ctx.curve, t2);
            vec![
                Ok(floor_residual("u1_over_t5", k, u3.u[0] / (t3.powi(5) / 5.0), one)),
                Ok(floor_residual("u2_over_t3", k, u3.u[1] / (t3.powi(3) / 3.0), one)),
                x_of_u(&u3, ctx).map(|x| floor_residual("x_t2", k, x * t3 * t3, one)),
                y_of_u(&u2, ctx).map(|y| floor_residual("y_t7", k, y * t2.powi(7), -one)),
            ]
        })
        .collect();
    collect_section(name, 1e-3, samples).with_note("u ratios and x t^2 at |t| = 1e-3; y t^7 at |t| = 1e-2")
}

fn round_trip_section(ctx: &SigmaContext, seed: u64, tol: f64) -> SectionReport {
    let name = "abel_jacobi_round_trip";
    let samples: Result<Vec<Vec<IdentityResidual>>> = (0..20)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                Ok(vec![
                    IdentityResidual::new("x_of_u", t, vec![s.p.x], x_of_u(&s.u, ctx)?, s.p.x),
                    IdentityResidual::new("y_of_u", t, vec![s.p.x], y_of_u(&s.u, ctx)?, s.p.y),
                ])
            })
        })
        .collect();
    collect_section(name, tol, samples.map(|v| v.into_iter().flatten().collect()))
}

fn involution_section(ctx: &SigmaContext, seed: u64) -> SectionReport {
    let name = "involution";
    let samples: Result<Vec<IdentityResidual>> = (0..10)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let b = abel_jacobi(&s.p.conjugate(), &ctx.curve, &ctx.periods)?;
                let r = lattice_reduce(&(s.u.u + b.u), &ctx.periods).u.norm();
                Ok(IdentityResidual::with_floor(name, t, Complex64::new(r, 0.0), Complex64::default(), 1.0))
            })
        })
        .collect();
    collect_section(name, 1e-8, samples)
}

fn inversion_section(ctx: &SigmaContext, seed: u64, tol: f64) -> SectionReport {
    let name = "jacobi_inversion";
    let samples: Result<Vec<Vec<IdentityResidual>>> = (0..20)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let pts = sample_points(ctx, rng, 3)?;
                let want = [pts[0].p.x, pts[1].p.x, pts[2].p.x];
                let u = JacobianPoint::new(pts[0].u.u + pts[1].u.u + pts[2].u.u);
                let shifted = JacobianPoint::new(u.u + ctx.periods.lattice_point([1, -1, 0], [0, 1, 1]));
                let mut out = Vec::new();
                for (label, v) in [("sum", u), ("shifted_sum", shifted)] {
                    let got = jacobi_inversion(&v, ctx)?;
                    let mut r = IdentityResidual::new(label, t, want.to_vec(), got.iter().sum(), want.iter().sum());
                    r.rel_residual = multiset_distance(&got, &want);
                    out.push(r);
                }
                Ok(out)
            })
        })
        .collect();
    collect_section(name, tol, samples.map(|v| v.into_iter().flatten().collect()))
        .with_note("residual: best-matching relative distance of the x-multisets")
}

fn duplication_section(ctx: &SigmaContext, seed: u64, tol: f64) -> SectionReport {
    let name = "duplication";
    let samples: Result<Vec<IdentityResidual>> = (0..50)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let two = ctx.sigma_jet(&(s.u.u * Complex64::new(2.0, 0.0)), 1);
                let one = ctx.sigma_jet(&s.u.u, 1);
                let lhs = (two.log_scale + two.jet.d1[2].ln() - 4.0 * (one.log_scale + one.jet.d1[1].ln())).exp();
                Ok(IdentityResidual::new(name, t, vec![s.p.x], lhs, -2.0 * s.p.y))
            })
        })
        .collect();
    collect_section(name, tol, samples)
}

/// `sigma_3` vanishes on the image of the curve and not on generic two-point sums;
/// `sigma` vanishes on two-point sums and not on generic three-point sums.
fn vanishing_section(ctx: &SigmaContext, seed: u64, config: &Config) -> SectionReport {
    let name = "vanishing";
    let rel_d3 = |u: &CVector3| {
        let j = ctx.sigma_jet(u, 2).jet;
        let scale = j.d2.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max) * u.norm().max(1e-3);
        j.d1[2].norm() / (j.d1[2].norm() + scale)
    };
    let rows: Result<Vec<[f64; 4]>> = (0..10)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let pts = sample_points(ctx, rng, 3)?;
                let two = JacobianPoint::new(pts[0].u.u + pts[1].u.u);
                let three = JacobianPoint::new(two.u + pts[2].u.u);
                Ok([rel_d3(&pts[0].u.u), rel_d3(&two.u), relative_sigma(&two, ctx), relative_sigma(&three, ctx)])
            })
        })
        .collect();
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return SectionReport::failed(name, config.theta_div_tol, format!("evaluation failed: {e}")),
    };
    let zero = Complex64::default();
    let mut samples = Vec::new();
    for (t, r) in rows.iter().enumerate() {
        samples.push(IdentityResidual::with_floor("sigma_3_on_curve", t, Complex64::new(r[0], 0.0), zero, 1.0));
        samples.push(IdentityResidual::with_floor("sigma_on_two_point_sums", t, Complex64::new(r[2], 0.0), zero, 1.0));
    }
    let generic_min = rows.iter().map(|r| r[1].min(r[3])).fold(f64::INFINITY, f64::min);
    SectionReport::from_samples(name, 1e-6, samples)
        .with_note(format!("smallest relative size on generic configurations {generic_min:.2e}"))
        .require(generic_min > 1e-3, "sigma or sigma_3 small on a generic configuration")
}

/// `sigma_3(u(t) - v) / (sigma_2(v) t^2) -> 1` for `u(t)` approaching the origin along the
/// curve, with second-order decay of `sigma_3(u(t) - v)`.
fn near_origin_section(ctx: &SigmaContext, seed: u64) -> SectionReport {
    let name = "sigma_3_near_origin";
    let rows: Result<Vec<(Complex64, Complex64, f64)>> = (0..10)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let s2v = ctx.sigma(&s.u.u, MultiIndex::from_indices(&[2])?);
                let d3 = MultiIndex::from_indices(&[3])?;
                let ratio = |h: f64| {
                    let tt = Complex64::from_polar(h, phase);
                    let u = abel_jacobi_near_infinity(&ctx.curve, tt).u;
                    ctx.sigma(&(u - s.u.u), d3) / (s2v * tt * tt)
                };
                let (r2, r3) = (ratio(1e-2), ratio(1e-3));
                let one = Complex64::new(1.0, 0.0);
                let order = ((r2 - one).norm() / (r3 - one).norm()).log10();
                Ok((r3, s.p.x, order))
            })
        })
        .collect();
    match rows {
        Ok(rows) => {
            let samples = rows
                .iter()
                .enumerate()
                .map(|(t, r)| IdentityResidual::with_floor(name, t, r.0, Complex64::new(1.0, 0.0), 1.0))
                .collect();
            let min_order = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
            SectionReport::from_samples(name, 1e-2, samples)
                .with_note(format!("ratio at |t| = 1e-3; smallest decay order of the deviation {min_order:.2}"))
                .require(min_order > 0.5, "deviation does not decay")
        }
        Err(e) => SectionReport::failed(name, 1e-2, format!("evaluation failed: {e}")),
    }
}

/// `sigma_3(u - v)` has a simple zero at `u = v` along the curve.
fn simple_zero_section(ctx: &SigmaContext, seed: u64) -> SectionReport {
    let name = "sigma_3_simple_zero";
    let samples: Result<Vec<IdentityResidual>> = (0..10)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                let d3 = MultiIndex::from_indices(&[3])?;
                let val = |h: f64| -> Result<f64> {
                    let (delta, _) = integrate_from(&s.p, s.p.x + Complex64::from_polar(h, phase), &ctx.curve)?;
                    Ok(ctx.sigma(&delta, d3).norm())
                };
                let order = (val(1e-2)? / val(1e-3)?).log10();
                Ok(IdentityResidual::with_floor(name, t, Complex64::new(order, 0.0), Complex64::new(1.0, 0.0), 1.0))
            })
        })
        .collect();
    collect_section(name, 0.05, samples).with_note("residual: |vanishing order - 1| from steps 1e-2 and 1e-3")
}

/// The determinant formula for `n = 3` with one of the four points at `|t| = 0.05` from
/// infinity, i.e. close to the origin of the Jacobian.
fn fs_near_origin_section(ctx: &SigmaContext, seed: u64, trials: usize, tol: f64) -> SectionReport {
    let name = "frobenius_stickelberger_near_origin";
    let samples: Result<Vec<IdentityResidual>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let pts = sample_points(ctx, rng, 3)?;
                let near = abel_jacobi_near_infinity(&ctx.curve, Complex64::from_polar(0.05, rng.gen_range(0.0..std::f64::consts::TAU)));
                let mut us: Vec<JacobianPoint> = pts.iter().map(|s| s.u).collect();
                us.push(near);
                Ok(IdentityResidual::new(name, t, xs(&pts), fs_sigma_side(&us, ctx)?, fs_determinant(&us, ctx)?))
            })
        })
        .collect();
    collect_section(name, tol, samples).with_note("n = 3, one point at |t| = 0.05; tolerance relaxed tenfold")
}

fn swap_section(ctx: &SigmaContext, seed: u64, trials: usize, tol: f64) -> SectionReport {
    let name = "frobenius_stickelberger_swap";
    let samples: Result<Vec<Vec<IdentityResidual>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let pts = sample_points(ctx, rng, 4)?;
                let us: Vec<JacobianPoint> = pts.iter().map(|s| s.u).collect();
                let mut sw = us.clone();
                sw.swap(1, 3);
                Ok(vec![
                    IdentityResidual::new("sigma_side", t, xs(&pts), fs_sigma_side(&sw, ctx)?, -fs_sigma_side(&us, ctx)?),
                    IdentityResidual::new("determinant_side", t, xs(&pts), fs_determinant(&sw, ctx)?, -fs_determinant(&us, ctx)?),
                ])
            })
        })
        .collect();
    collect_section(name, tol, samples.map(|v| v.into_iter().flatten().collect()))
}

fn psi_periodicity_section(ctx: &SigmaContext, seed: u64, trials: usize, tol: f64) -> SectionReport {
    let name = "psi_periodicity";
    let samples: Result<Vec<Vec<IdentityResidual>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let a = [rng.gen_range(-1..=1), rng.gen_range(-1..=1), rng.gen_range(-1..=1)];
                let b = [rng.gen_range(-1..=1), rng.gen_range(-1..=1), rng.gen_range(-1..=1)];
                let shifted = JacobianPoint::new(s.u.u + ctx.periods.lattice_point(a, b));
                (3..=5)
                    .map(|n| {
                        Ok(IdentityResidual::new(
                            &format!("psi_{n}"),
                            t,
                            vec![s.p.x],
                            psi_numeric(&shifted, n, ctx)?,
                            psi_numeric(&s.u, n, ctx)?,
                        ))
                    })
                    .collect()
            })
        })
        .collect();
    collect_section(name, tol, samples.map(|v| v.into_iter().flatten().collect()))
}

/// `sigma(2u)` vanishes on the image of the curve, so `psi_2 = 0` there.
fn psi2_section(ctx: &SigmaContext, seed: u64, trials: usize) -> SectionReport {
    let name = "psi_2_vanishing";
    let samples: Result<Vec<IdentityResidual>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                let r = relative_sigma(&JacobianPoint::new(s.u.u * Complex64::new(2.0, 0.0)), ctx);
                Ok(IdentityResidual::with_floor(name, t, Complex64::new(r, 0.0), Complex64::default(), 1.0))
            })
        })
        .collect();
    collect_section(name, 1e-6, samples).with_note("residual: |sigma(2u)| relative to its local scale")
}

fn psi_symbolic_section(ctx: &SigmaContext, n: usize, seed: u64, trials: usize, tol: f64) -> SectionReport {
    let name = format!("psi_symbolic_n{n}");
    let psi = match psi_symbolic(n, &ctx.curve) {
        Ok(p) => p,
        Err(e) => return SectionReport::failed(&name, tol, e.to_string()),
    };
    let samples: Result<Vec<IdentityResidual>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            with_retries(seed, &name, t, |rng| {
                let s = sample_point(ctx, rng)?;
                Ok(IdentityResidual::new(&name, t, vec![s.p.x], psi.eval(&s.p)?, psi_numeric(&s.u, n, ctx)?))
            })
        })
        .collect();
    collect_section(&name, tol, samples).with_note(format!("pole order at infinity {:?}", psi.pole_order()))
}

/// Every check of the library on one curve. Failures are reported, never raised.
pub fn verify_all(ctx: &SigmaContext, config: &Config) -> VerificationReport {
    let start = Instant::now();
    let seed = config.seed;
    let trials = config.trials;
    let tol = config.identity_tol;
    let mut sections = vec![
        riemann_section(ctx, config),
        normalization_section(ctx),
        taylor_section(ctx),
        parity_section(ctx, seed),
        quasi_periodicity_section(ctx, seed),
        infinity_section(ctx),
        round_trip_section(ctx, seed, tol),
        involution_section(ctx, seed),
        inversion_section(ctx, seed, tol),
        duplication_section(ctx, seed, tol),
        vanishing_section(ctx, seed, config),
        near_origin_section(ctx, seed),
        simple_zero_section(ctx, seed),
    ];
    for n in 1..=6 {
        sections.extend(verify_frobenius_stickelberger(n, trials, seed, ctx, tol));
    }
    sections.push(fs_near_origin_section(ctx, seed, trials.div_ceil(5), 10.0 * tol));
    sections.push(swap_section(ctx, seed, trials.div_ceil(5), tol));
    sections.push(psi_periodicity_section(ctx, seed, trials.div_ceil(5), tol));
    sections.push(psi2_section(ctx, seed, trials.div_ceil(5)));
    for n in 4..=6 {
        sections.extend(verify_kiepert(n, &[1, 3], trials, seed, ctx, config.psi_tol));
    }
    for j in 1..=3 {
        sections.push(verify_limit_ratio(j, trials, seed, ctx, 1e-4, (0.8, 1.2)).section);
    }
    for n in 4..=5 {
        sections.push(psi_symbolic_section(ctx, n, seed, trials, config.psi_tol));
    }
    for s in &mut sections {
        // only a plausible cause when the residuals are small but above tolerance
        if !s.pass && s.tolerance <= config.identity_tol && s.max_rel_residual > s.tolerance && s.max_rel_residual < 1e-2 {
            let hint = format!("residuals may be limited by the period accuracy (quad_tol = {:e})", config.quad_tol);
            s.note = Some(match s.note.take() {
                Some(n) => format!("{n}; {hint}"),
                None => hint,
            });
        }
    }
    let all_pass = sections.iter().all(|s| s.pass);
    VerificationReport {
        curve_hash: ctx.curve.hash_hex(),
        config: config.clone(),
        characteristics: ctx.characteristics,
        sections,
        all_pass,
        runtime_sec: start.elapsed().as_secs_f64(),
    }
}
