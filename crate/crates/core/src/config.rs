//! Every tolerance used by the library lives in [`Config`].

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Minimum pairwise root distance of f, relative to the largest root modulus.
    pub root_sep_tol: f64,
    /// Relative residual allowed in `y^2 = f(x)`.
    pub on_curve_tol: f64,
    /// Target accuracy of every cycle integral.
    pub quad_tol: f64,
    /// Relative symmetry defect allowed in the Riemann matrix.
    pub sym_tol: f64,
    /// Largest acceptable condition number of omega'.
    pub max_omega_cond: f64,
    /// Tail bound for the truncated theta series.
    pub target_tol: f64,
    /// Optional fixed truncation radius, overriding the tail bound.
    pub trunc_radius_override: Option<usize>,
    /// Relative size below which sigma counts as vanishing.
    pub theta_div_tol: f64,
    /// Relative size below which sigma_2 counts as vanishing.
    pub origin_tol: f64,
    /// Residual bound for the determinant identities.
    pub identity_tol: f64,
    /// Residual bound for the determinant-versus-quotient psi comparisons.
    pub psi_tol: f64,
    /// Trials per randomized check.
    pub trials: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            root_sep_tol: 1e-9,
            on_curve_tol: 1e-10,
            quad_tol: 1e-10,
            sym_tol: 1e-8,
            max_omega_cond: 1e8,
            target_tol: 1e-16,
            trunc_radius_override: None,
            theta_div_tol: 1e-7,
            origin_tol: 1e-10,
            identity_tol: 1e-6,
            psi_tol: 1e-5,
            trials: 25,
            seed: 1,
        }
    }
}

impl Config {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("root_sep_tol", self.root_sep_tol),
            ("on_curve_tol", self.on_curve_tol),
            ("quad_tol", self.quad_tol),
            ("sym_tol", self.sym_tol),
            ("max_omega_cond", self.max_omega_cond),
            ("target_tol", self.target_tol),
            ("theta_div_tol", self.theta_div_tol),
            ("origin_tol", self.origin_tol),
            ("identity_tol", self.identity_tol),
            ("psi_tol", self.psi_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.trials == 0 {
            return Err(crate::Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(())
    }
}
