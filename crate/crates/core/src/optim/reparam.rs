use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain of one parameter in the constrained space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Free,
    /// Open interval `(lo, hi)`, via a scaled logistic.
    Interval(f64, f64),
    /// `(lo, ∞)`, via `lo + exp(u)`.
    Lower(f64),
    /// `(-∞, hi)`, via `hi - exp(u)`.
    Upper(f64),
}

impl Bound {
    fn check(&self) {
        if let Bound::Interval(lo, hi) = *self {
            assert!(lo < hi, "malformed interval bound ({lo}, {hi})");
        }
    }

    /// Unbounded -> constrained.
    pub fn forward(&self, u: f64) -> f64 {
        self.check();
        match *self {
            Bound::Free => u,
            Bound::Interval(lo, hi) => {
                let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                // tanh(18) is still below 1 in double precision.
                let y = c + r * (0.5 * u.clamp(-36.0, 36.0)).tanh();
                y.clamp(lo.next_up(), hi.next_down())
            }
            Bound::Lower(lo) => (lo + u.clamp(-700.0, 700.0).exp()).max(lo.next_up()),
            Bound::Upper(hi) => (hi - u.clamp(-700.0, 700.0).exp()).min(hi.next_down()),
        }
    }

    /// Constrained -> unbounded. Fails for points outside the open domain.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.check();
        let outside = || Error::Argument(format!("{y} lies outside {self:?}"));
        match *self {
            Bound::Free => Ok(y),
            Bound::Interval(lo, hi) => {
                if !(lo < y && y < hi) {
                    return Err(outside());
                }
                let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                Ok(2.0 * ((y - c) / r).atanh())
            }
            Bound::Lower(lo) => {
                if !(y > lo) {
                    return Err(outside());
                }
                Ok((y - lo).ln())
            }
            Bound::Upper(hi) => {
                if !(y < hi) {
                    return Err(outside());
                }
                Ok((hi - y).ln())
            }
        }
    }
}

/// Maps an unconstrained vector into the box described by `bounds`.
pub fn bounded_reparam(theta_unbounded: &[f64], bounds: &[Bound]) -> Vec<f64> {
    assert_eq!(theta_unbounded.len(), bounds.len(), "one bound per component");
    theta_unbounded.iter().zip(bounds).map(|(&u, b)| b.forward(u)).collect()
}

/// Inverse of [`bounded_reparam`].
pub fn unbounded_reparam(theta: &[f64], bounds: &[Bound]) -> Result<Vec<f64>> {
    assert_eq!(theta.len(), bounds.len(), "one bound per component");
    theta.iter().zip(bounds).map(|(&y, b)| b.inverse(y)).collect()
}
