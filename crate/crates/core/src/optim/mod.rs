//! Unconstrained minimizers shared by the likelihood fits.
//!
//! Objectives are plain `Fn(&[f64]) -> f64` closures. A point outside the
//! model's domain should evaluate to `f64::INFINITY` (NaN is treated the
//! same way); the minimizers never step onto such points.

mod bfgs;
mod gradient;
mod reparam;
mod simplex;

use serde::{Deserialize, Serialize};

pub use bfgs::{minimize_bfgs, minimize_bfgs_with, BfgsOptions};
pub use gradient::{default_step, numeric_gradient, numeric_gradient_auto, numeric_hessian};
pub use reparam::{bounded_reparam, unbounded_reparam, Bound};
pub use simplex::{minimize_simplex, minimize_simplex_with, SimplexOptions};

/// Default function-spread tolerance for the simplex.
pub const DEFAULT_F_TOL: f64 = 1e-8;
/// Default gradient infinity-norm tolerance for BFGS.
pub const DEFAULT_GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationLimit,
    LineSearchFailed,
    /// The gradient could not be evaluated at the current point.
    GradientFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

pub(crate) fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
