//! Roots of a monic complex polynomial by Aberth–Ehrlich iteration with Newton polishing.

use num_complex::Complex64;

use crate::{Error, Result};

/// Evaluate `p` and `p'` at `z`; `coeffs[k]` multiplies `z^k`.
pub fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of the polynomial with coefficients `coeffs` (lowest degree first, leading
/// coefficient non-zero). Multiple roots are returned with multiplicity, to the
/// accuracy the iteration reaches.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    // Cauchy bound on root moduli
    let bound = 1.0 + monic[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = 0.5 * bound;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64))
        .collect();

    let scale = monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = horner_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = p / dp;
            let repulsion: Complex64 =
                (0..deg).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = newton / (1.0 - newton * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }

    // polish each root with a few Newton steps on the original polynomial
    for r in z.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = horner_with_derivative(&monic, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-3 * (1.0 + r.norm()) {
                break;
            }
            *r -= step;
        }
    }

    let residual = z
        .iter()
        .map(|&r| horner_with_derivative(&monic, r).0.norm() / (scale * (1.0 + r.norm()).powi(deg as i32)))
        .fold(0.0, f64::max);
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::RootFindFailure { residual });
    }
    Ok(z)
}
