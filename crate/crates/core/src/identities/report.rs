use num_complex::Complex64;
use serde::Serialize;

use crate::theta::ThetaCharacteristics;
use crate::Config;

/// `|lhs - rhs| / max(|lhs|, |rhs|, 1e-300)`.
pub fn rel_residual(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    /// Trial index and the `x`-coordinates of the sampled points.
    pub trial: usize,
    pub inputs: Vec<Complex64>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub rel_residual: f64,
}

impl IdentityResidual {
    pub fn new(name: &str, trial: usize, inputs: Vec<Complex64>, lhs: Complex64, rhs: Complex64) -> Self {
        Self { name: name.to_string(), trial, inputs, lhs, rhs, rel_residual: rel_residual(lhs, rhs) }
    }

    /// Same, with the residual measured against `max(|rhs|, floor)` instead.
    pub fn with_floor(name: &str, trial: usize, lhs: Complex64, rhs: Complex64, floor: f64) -> Self {
        let r = (lhs - rhs).norm() / rhs.norm().max(floor);
        Self { name: name.to_string(), trial, inputs: Vec::new(), lhs, rhs, rel_residual: r }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SectionReport {
    pub name: String,
    pub trials: usize,
    pub max_rel_residual: f64,
    pub median_rel_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub samples: Vec<IdentityResidual>,
}

impl SectionReport {
    /// Passes iff every residual is at most `tolerance` (and there is at least one).
    pub fn from_samples(name: &str, tolerance: f64, samples: Vec<IdentityResidual>) -> Self {
        let mut r: Vec<f64> = samples.iter().map(|s| s.rel_residual).collect();
        r.sort_by(f64::total_cmp);
        let max = r.last().copied().unwrap_or(f64::NAN);
        let median = if r.is_empty() { f64::NAN } else { r[r.len() / 2] };
        let pass = !r.is_empty() && r.iter().all(|&v| v <= tolerance);
        Self {
            name: name.to_string(),
            trials: samples.len(),
            max_rel_residual: max,
            median_rel_residual: median,
            tolerance,
            pass,
            note: None,
            samples,
        }
    }

    pub fn failed(name: &str, tolerance: f64, reason: String) -> Self {
        let mut s = Self::from_samples(name, tolerance, Vec::new());
        s.note = Some(reason);
        s
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Force failure on top of the residual criterion.
    pub fn require(mut self, ok: bool, why: impl Into<String>) -> Self {
        if !ok {
            self.pass = false;
            let why = why.into();
            self.note = Some(match self.note.take() {
                Some(n) => format!("{n}; {why}"),
                None => why,
            });
        }
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub curve_hash: String,
    pub config: Config,
    pub characteristics: ThetaCharacteristics,
    pub sections: Vec<SectionReport>,
    pub all_pass: bool,
    pub runtime_sec: f64,
}

impl VerificationReport {
    pub fn section(&self, name: &str) -> Option<&SectionReport> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Report JSON with the runtime zeroed, for reproducibility comparisons.
    pub fn without_runtime(&self) -> Self {
        Self { runtime_sec: 0.0, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_is_symmetric_and_guarded() {
        let a = Complex64::new(1.0, 0.0);
        let b = Complex64::new(1.0, 1e-9);
        assert_eq!(rel_residual(a, b), rel_residual(b, a));
        assert_eq!(rel_residual(Complex64::default(), Complex64::default()), 0.0);
        assert_eq!(rel_residual(a, -a), 2.0);
    }

    #[test]
    fn section_pass_flag() {
        let s = |r: f64| IdentityResidual::new("t", 0, vec![], Complex64::new(1.0, 0.0), Complex64::new(1.0 + r, 0.0));
        let ok = SectionReport::from_samples("a", 1e-6, vec![s(1e-8), s(1e-7)]);
        assert!(ok.pass);
        let bad = SectionReport::from_samples("b", 1e-6, vec![s(1e-8), s(1e-3)]);
        assert!(!bad.pass);
        assert!(!SectionReport::from_samples("c", 1e-6, vec![]).pass);
        assert!(!ok.require(false, "x").pass);
    }
}
