//! Genus-3 hyperelliptic sigma functions for `y^2 = f(x)`, `f` monic of degree seven,
//! and numerical verification of their determinant formulas.

pub mod abel_jacobi;
pub mod config;
pub mod curve;
pub mod error;
pub mod identities;
pub mod exact;
pub mod periods;
pub mod quadrature;
pub mod roots;
pub mod sigma;
pub mod theta;

pub use config::Config;
pub use curve::{Curve, CurveFunction, CurvePoint, Monomial};
pub use error::{Error, Result};
