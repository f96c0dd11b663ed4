use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::MonthlySeries;

use super::poly::{difference_values, expand_polynomials, LagPolynomial};
use super::{ExogMatrix, SarimaxOrders, SarimaxParams};

/// Harvey representation of a stationary ARMA process `w_t`:
///
/// ```text
/// α_{t+1} = T α_t + R ε_{t+1},   w_t = e₁ᵀ α_t
/// ```
///
/// `T` has the AR weights in its first column and ones on the
/// superdiagonal; `R = (1, θ₁, …, θ_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    /// AR weights `φ_i` in `w_t = Σ φ_i w_{t-i} + …`.
    pub phi: Vec<f64>,
    /// MA weights `θ_j` in `… + ε_t + Σ θ_j ε_{t-j}`.
    pub theta: Vec<f64>,
    pub dim: usize,
}

impl StateSpace {
    pub fn new(ar: &LagPolynomial, ma: &LagPolynomial) -> Self {
        let dim = ar.degree().max(ma.degree() + 1);
        Self {
            phi: ar.coefficients.clone(),
            theta: ma.coefficients.iter().map(|c| -c).collect(),
            dim,
        }
    }

    pub fn from_orders(orders: &SarimaxOrders, params: &SarimaxParams) -> Self {
        let (ar, ma) = expand_polynomials(orders, params);
        Self::new(&ar, &ma)
    }

    fn phi_at(&self, i: usize) -> f64 {
        self.phi.get(i).copied().unwrap_or(0.0)
    }

    pub fn transition(&self) -> DMatrix<f64> {
        let k = self.dim;
        DMatrix::from_fn(k, k, |i, j| {
            if j == 0 && i < self.phi.len() {
                self.phi[i]
            } else if j == i + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Observation loading `e₁`.
    pub fn loading(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        z[0] = 1.0;
        z
    }

    pub fn selection(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| match i {
                0 => 1.0,
                _ => self.theta.get(i - 1).copied().unwrap_or(0.0),
            })
            .collect()
    }

    /// `σ² R Rᵀ`.
    pub fn state_cov(&self, sigma2: f64) -> DMatrix<f64> {
        let r = self.selection();
        DMatrix::from_fn(self.dim, self.dim, |i, j| sigma2 * r[i] * r[j])
    }
}

/// Solves `P = T P Tᵀ + R Rᵀ` by doubling: `P = Σ_j T^j R Rᵀ (T^j)ᵀ`.
pub fn stationary_covariance(ss: &StateSpace) -> Result<DMatrix<f64>> {
    let mut a = ss.transition();
    let mut q = ss.state_cov(1.0);
    for _ in 0..64 {
        let inc = &a * &q * a.transpose();
        q += &inc;
        a = &a * &a;
        if !q.iter().all(|v| v.is_finite()) {
            break;
        }
        if inc.amax() <= 1e-16 * q.amax() && a.amax() < 1e-8 {
            return Ok(q);
        }
    }
    Err(Error::Numeric(
        "stationary state covariance did not converge (AR part not stationary?)".into(),
    ))
}

pub(crate) struct FilterOutput {
    /// One-step innovations.
    pub v: Vec<f64>,
    /// Innovation variances relative to σ².
    pub f: Vec<f64>,
    /// Predicted state and covariance (unit σ²) for the step after the sample.
    pub a_next: Vec<f64>,
    pub p_next: Vec<f64>,
}

impl FilterOutput {
    /// Gaussian log-likelihood at innovation variance `sigma2`.
    pub fn loglik(&self, sigma2: f64) -> f64 {
        let ln2pi = (2.0 * PI).ln();
        self.v
            .iter()
            .zip(&self.f)
            .map(|(v, f)| -0.5 * (ln2pi + (sigma2 * f).ln() + v * v / (sigma2 * f)))
            .sum()
    }

    /// σ² maximizing the likelihood, and the likelihood there.
    pub fn concentrated(&self) -> (f64, f64) {
        let n = self.v.len() as f64;
        let sigma2 = self.v.iter().zip(&self.f).map(|(v, f)| v * v / f).sum::<f64>() / n;
        let log_det: f64 = self.f.iter().map(|f| f.ln()).sum();
        let ll = -0.5 * n * ((2.0 * PI).ln() + 1.0 + sigma2.ln()) - 0.5 * log_det;
        (sigma2, ll)
    }
}

/// Kalman filter for `w` with unit innovation variance, started from the
/// stationary distribution.
pub(crate) fn run_filter(ss: &StateSpace, w: &[f64]) -> Result<FilterOutput> {
    let k = ss.dim;
    let p0 = stationary_covariance(ss)?;
    let mut p: Vec<f64> = (0..k * k).map(|idx| p0[(idx / k, idx % k)]).collect();
    let r = ss.selection();
    let phi: Vec<f64> = (0..k).map(|i| ss.phi_at(i)).collect();
    let mut a = vec![0.0; k];
    let mut m = vec![0.0; k * k];
    let mut pc = vec![0.0; k];
    let mut v_out = Vec::with_capacity(w.len());
    let mut f_out = Vec::with_capacity(w.len());

    for (t, &wt) in w.iter().enumerate() {
        let f = p[0];
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Numeric(format!("innovation variance {f} at step {t}")));
        }
        let v = wt - a[0];
        v_out.push(v);
        f_out.push(f);

        for i in 0..k {
            pc[i] = p[i * k];
        }
        for i in 0..k {
            a[i] += pc[i] * v / f;
            for j in 0..k {
                p[i * k + j] -= pc[i] * pc[j] / f;
            }
        }
        predict(&phi, &r, &mut a, &mut p, &mut m);
    }
    Ok(FilterOutput {
        v: v_out,
        f: f_out,
        a_next: a,
        p_next: p,
    })
}

/// `a ← T a`, `P ← T P Tᵀ + R Rᵀ`, exploiting the companion structure.
pub(crate) fn predict(phi: &[f64], r: &[f64], a: &mut [f64], p: &mut [f64], m: &mut [f64]) {
    let k = phi.len();
    let a0 = a[0];
    for i in 0..k {
        a[i] = phi[i] * a0 + if i + 1 < k { a[i + 1] } else { 0.0 };
    }
    // M = T P
    for i in 0..k {
        for j in 0..k {
            let below = if i + 1 < k { p[(i + 1) * k + j] } else { 0.0 };
            m[i * k + j] = phi[i] * p[j] + below;
        }
    }
    // P = M Tᵀ + R Rᵀ
    for i in 0..k {
        let mi0 = m[i * k];
        for j in 0..k {
            let right = if j + 1 < k { m[i * k + j + 1] } else { 0.0 };
            p[i * k + j] = mi0 * phi[j] + right + r[i] * r[j];
        }
    }
}

/// Regression residual `y_t - c - z_t γ` on the calendar of `y`.
pub(crate) fn regression_residual(params: &SarimaxParams, y: &MonthlySeries, exog: &ExogMatrix) -> Result<Vec<f64>> {
    let cols = exog.values_over(y.range())?;
    Ok(y.values()
        .iter()
        .enumerate()
        .map(|(t, yt)| yt - params.intercept - cols.iter().zip(&params.gamma).map(|(c, g)| g * c[t]).sum::<f64>())
        .collect())
}

pub(crate) fn check_stationary(params: &SarimaxParams) -> Result<()> {
    if !LagPolynomial::new(params.ar.clone()).is_stable() {
        return Err(Error::DomainValue(format!(
            "non-seasonal AR polynomial {:?} is not stationary",
            params.ar
        )));
    }
    if !LagPolynomial::new(params.sar.clone()).is_stable() {
        return Err(Error::DomainValue(format!(
            "seasonal AR polynomial {:?} is not stationary",
            params.sar
        )));
    }
    Ok(())
}

/// Exact Gaussian log-likelihood of `y` given `params`. The regression
/// residual is differenced and treated as a stationary ARMA process.
pub fn kalman_loglik(
    orders: &SarimaxOrders,
    params: &SarimaxParams,
    y: &MonthlySeries,
    exog: &ExogMatrix,
) -> Result<f64> {
    orders.validate()?;
    params.check(orders, exog.n_cols())?;
    if params.sigma2_eps <= 0.0 {
        return Err(Error::Argument(
            "innovation variance must be > 0 for a likelihood".into(),
        ));
    }
    check_stationary(params)?;
    if y.len() <= orders.lost() {
        return Err(Error::InsufficientData {
            needed: orders.lost() + 1,
            got: y.len(),
        });
    }
    let u = regression_residual(params, y, exog)?;
    let w = difference_values(&u, orders.m, orders.sm, orders.s);
    let ss = StateSpace::from_orders(orders, params);
    Ok(run_filter(&ss, &w)?.loglik(params.sigma2_eps))
}
