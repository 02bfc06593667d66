//! Both sides of the determinant identities, residual bookkeeping and the verification suite.

mod kiepert;
mod report;
mod suite;

pub use kiepert::{kiepert_determinant, laplace_determinant, psi_symbolic, KiepertMatrix};
pub use report::{rel_residual, IdentityResidual, SectionReport, VerificationReport};
pub use suite::{
    fs_sign, sample_point, trial_rng, verify_all, verify_frobenius_stickelberger, verify_kiepert, verify_limit_ratio,
    LimitReport, SampledPoint,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::abel_jacobi::{x_of_u, y_of_u, JacobianPoint};
use crate::curve::monomial_basis;
use crate::periods::lattice_reduce;
use crate::sigma::SigmaContext;
use crate::{Error, Result};

/// Minimal separation modulo the lattice below which two points count as coincident.
const COINCIDENCE_TOL: f64 = 1e-8;

fn log_sigma(ctx: &SigmaContext, u: &crate::periods::CVector3, orders: [u8; 3]) -> Complex64 {
    let order = orders.iter().map(|&o| o as usize).sum();
    let j = ctx.sigma_jet(u, order);
    j.log_scale + j.jet.partial(orders).ln()
}

fn check_configuration(us: &[JacobianPoint], ctx: &SigmaContext) -> Result<()> {
    if us.len() < 2 {
        return Err(Error::InvalidArgument("at least two points are required".into()));
    }
    for (i, a) in us.iter().enumerate() {
        if lattice_reduce(&a.u, &ctx.periods).u.norm() < COINCIDENCE_TOL {
            return Err(Error::DegenerateConfiguration(format!("point {i} is the origin")));
        }
        for (k, b) in us.iter().enumerate().skip(i + 1) {
            if lattice_reduce(&(a.u - b.u), &ctx.periods).u.norm() < COINCIDENCE_TOL {
                return Err(Error::DegenerateConfiguration(format!("points {i} and {k} coincide")));
            }
        }
    }
    Ok(())
}

/// `sigma(u_0 + ... + u_n) prod_{i<j} sigma_3(u_i - u_j) / prod_i sigma_2(u_i)^(n+1)`; for
/// two points the vanishing `sigma(u_0 + u_1)` is replaced by `sigma_3(u_0 + u_1)`.
pub fn fs_sigma_side(us: &[JacobianPoint], ctx: &SigmaContext) -> Result<Complex64> {
    check_configuration(us, ctx)?;
    let n = us.len() - 1;
    let total = us.iter().fold(crate::periods::CVector3::zeros(), |acc, p| acc + p.u);
    let mut log = if n == 1 { log_sigma(ctx, &total, [0, 0, 1]) } else { log_sigma(ctx, &total, [0, 0, 0]) };
    for i in 0..=n {
        for k in i + 1..=n {
            log += log_sigma(ctx, &(us[i].u - us[k].u), [0, 0, 1]);
        }
        let s2 = ctx.sigma_jet(&us[i].u, 1);
        if s2.jet.d1[1].norm() <= ctx.origin_tol() * s2.jet.d1.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            return Err(Error::DegenerateConfiguration(format!("sigma_2 vanishes at point {i}")));
        }
        log -= (n as f64 + 1.0) * (s2.log_scale + s2.jet.d1[1].ln());
    }
    Ok(log.exp())
}

/// Determinant of `[m_k(x(u_i), y(u_i))]` with `m_k` the first `n + 1` monomials by pole order.
pub fn fs_determinant(us: &[JacobianPoint], ctx: &SigmaContext) -> Result<Complex64> {
    check_configuration(us, ctx)?;
    let coords = us
        .iter()
        .map(|u| Ok((x_of_u(u, ctx)?, y_of_u(u, ctx)?)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    Ok(monomial_determinant(&coords))
}

/// `det [m_k(x_i, y_i)]` for the first `len` monomials.
pub fn monomial_determinant(coords: &[(Complex64, Complex64)]) -> Complex64 {
    let basis = monomial_basis(coords.len() - 1);
    let m = DMatrix::from_fn(coords.len(), coords.len(), |i, k| basis[k].eval(coords[i].0, coords[i].1));
    m.determinant()
}

/// `psi_n(u) = sigma(n u) / sigma_2(u)^(n^2)`.
pub fn psi_numeric(u: &JacobianPoint, n: usize, ctx: &SigmaContext) -> Result<Complex64> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let s = ctx.sigma_jet(&u.u, 1);
    let scale = s.jet.d1.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if s.jet.d1[1].norm() <= ctx.origin_tol() * scale || scale == 0.0 {
        return Err(Error::AtOrigin { value: s.jet.d1[1].norm() });
    }
    let nu = u.u * Complex64::new(n as f64, 0.0);
    let top = ctx.sigma_jet(&nu, 0);
    let n2 = (n * n) as f64;
    let log = top.log_scale + top.jet.v.ln() - n2 * (s.log_scale + s.jet.d1[1].ln());
    Ok(log.exp())
}
