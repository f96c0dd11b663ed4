//! EGARCH(p, o, q) conditional volatility of zero-mean returns.
//!
//! ```text
//! ln σ²_t = ν + Σ_i κ_i (|z_{t-i}| - √(2/π)) + Σ_j δ_j z_{t-j} + Σ_k φ_k ln σ²_{t-k}
//! z_t = r_t / σ_t
//! ```
//!
//! Innovations are standard normal, so `√(2/π) = E|z|` centres the
//! magnitude term. Pre-sample log-variances take `init_logvar` and
//! pre-sample standardized shocks are zero.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{
    bounded_reparam, minimize_bfgs_with, minimize_simplex_with, unbounded_reparam, BfgsOptions, Bound, SimplexOptions,
    Termination,
};
use crate::par::{self, Execution};
use crate::series::{mean_var, MonthStamp, MonthlySeries};

const MAX_ORDER: usize = 12;
/// ln σ² beyond this overflows σ² = exp(ln σ²).
const LOGVAR_LIMIT: f64 = 700.0;
const BURN_IN: usize = 500;

fn abs_mean_normal() -> f64 {
    (2.0 / PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EgarchOrders {
    /// Magnitude lags.
    pub p: usize,
    /// Asymmetry lags.
    pub o: usize,
    /// Persistence lags.
    pub q: usize,
}

impl EgarchOrders {
    pub fn new(p: usize, o: usize, q: usize) -> Result<Self> {
        if p + o + q == 0 {
            return Err(Error::Argument("EGARCH needs at least one lag".into()));
        }
        if p.max(o).max(q) > MAX_ORDER {
            return Err(Error::Argument(format!(
                "EGARCH orders ({p},{o},{q}) exceed the maximum lag {MAX_ORDER}"
            )));
        }
        Ok(Self { p, o, q })
    }

    pub fn total(&self) -> usize {
        self.p + self.o + self.q
    }

    /// Number of free parameters, including ν.
    pub fn n_params(&self) -> usize {
        1 + self.total()
    }
}

impl Default for EgarchOrders {
    fn default() -> Self {
        Self { p: 1, o: 1, q: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchParams {
    pub nu: f64,
    pub kappa: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl EgarchParams {
    pub fn zeros(orders: EgarchOrders) -> Self {
        Self {
            nu: 0.0,
            kappa: vec![0.0; orders.p],
            delta: vec![0.0; orders.o],
            phi: vec![0.0; orders.q],
        }
    }

    /// Convenience constructor for the (1,1,1) model.
    pub fn one_one_one(nu: f64, kappa: f64, delta: f64, phi: f64) -> Self {
        Self {
            nu,
            kappa: vec![kappa],
            delta: vec![delta],
            phi: vec![phi],
        }
    }

    fn check(&self, orders: EgarchOrders) -> Result<()> {
        if self.kappa.len() != orders.p || self.delta.len() != orders.o || self.phi.len() != orders.q {
            return Err(Error::Argument(format!(
                "parameter lengths ({}, {}, {}) do not match orders ({}, {}, {})",
                self.kappa.len(),
                self.delta.len(),
                self.phi.len(),
                orders.p,
                orders.o,
                orders.q
            )));
        }
        let all_finite = std::iter::once(self.nu)
            .chain(self.kappa.iter().copied())
            .chain(self.delta.iter().copied())
            .chain(self.phi.iter().copied())
            .all(f64::is_finite);
        if !all_finite {
            return Err(Error::Argument("EGARCH parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.phi.iter().map(|v| v.abs()).sum()
    }

    /// Stationary mean of ln σ², `ν / (1 - Σφ)`.
    pub fn unconditional_logvar(&self) -> f64 {
        self.nu / (1.0 - self.phi.iter().sum::<f64>())
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.nu];
        v.extend(&self.kappa);
        v.extend(&self.delta);
        v.extend(&self.phi);
        v
    }

    fn from_slice(orders: EgarchOrders, v: &[f64]) -> Self {
        let (p, o) = (orders.p, orders.o);
        Self {
            nu: v[0],
            kappa: v[1..1 + p].to_vec(),
            delta: v[1 + p..1 + p + o].to_vec(),
            phi: v[1 + p + o..].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchFit {
    pub orders: EgarchOrders,
    pub params: EgarchParams,
    pub init_logvar: f64,
    /// Conditional volatility, aligned with the return series.
    pub sigma: MonthlySeries,
    pub loglik: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
}

/// Runs the recursion and returns ln σ²_t, together with the Gaussian
/// log-likelihood of the returns.
fn filter_core(params: &EgarchParams, r: &[f64], init_logvar: f64) -> std::result::Result<(Vec<f64>, f64), usize> {
    let n = r.len();
    let c = abs_mean_normal();
    let ln2pi = (2.0 * PI).ln();
    let mut h = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut ll = 0.0;
    for t in 0..n {
        let mut lv = params.nu;
        for (i, k) in params.kappa.iter().enumerate() {
            let zi: f64 = if t > i { z[t - i - 1] } else { 0.0 };
            lv += k * (zi.abs() - c);
        }
        for (j, d) in params.delta.iter().enumerate() {
            if t > j {
                lv += d * z[t - j - 1];
            }
        }
        for (k, p) in params.phi.iter().enumerate() {
            lv += p * if t > k { h[t - k - 1] } else { init_logvar };
        }
        if !(lv.abs() < LOGVAR_LIMIT) {
            return Err(t);
        }
        h[t] = lv;
        z[t] = r[t] * (-0.5 * lv).exp();
        ll -= 0.5 * (ln2pi + lv + z[t] * z[t]);
    }
    Ok((h, ll))
}

fn check_inputs(params: &EgarchParams, orders: EgarchOrders, returns: &MonthlySeries, init_logvar: f64) -> Result<()> {
    params.check(orders)?;
    if !init_logvar.is_finite() {
        return Err(Error::Argument(format!(
            "initial log-variance {init_logvar} is not finite"
        )));
    }
    if let Some((month, v)) = returns.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain {
            month,
            message: format!("return {v} is not finite"),
        });
    }
    Ok(())
}

fn overflow(returns: &MonthlySeries, t: usize) -> Error {
    Error::Numeric(format!(
        "EGARCH log-variance left the representable range at {} (t = {t})",
        returns.month_at(t)
    ))
}

/// Conditional volatility σ_t for every month of `returns`.
pub fn egarch_filter(
    params: &EgarchParams,
    orders: EgarchOrders,
    returns: &MonthlySeries,
    init_logvar: f64,
) -> Result<MonthlySeries> {
    check_inputs(params, orders, returns, init_logvar)?;
    let (h, _) = filter_core(params, returns.values(), init_logvar).map_err(|t| overflow(returns, t))?;
    MonthlySeries::new(
        returns.start(),
        h.iter().map(|lv| (0.5 * lv).exp()).collect(),
        "volatility",
    )
}

/// Gaussian log-likelihood `-½ Σ (ln 2π + ln σ²_t + r²_t / σ²_t)`.
pub fn egarch_loglik(
    params: &EgarchParams,
    orders: EgarchOrders,
    returns: &MonthlySeries,
    init_logvar: f64,
) -> Result<f64> {
    check_inputs(params, orders, returns, init_logvar)?;
    filter_core(params, returns.values(), init_logvar)
        .map(|(_, ll)| ll)
        .map_err(|t| overflow(returns, t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgarchFitOptions {
    /// Minimum number of returns.
    pub min_obs: usize,
    pub simplex: SimplexOptions,
    pub bfgs: BfgsOptions,
}

impl Default for EgarchFitOptions {
    fn default() -> Self {
        Self {
            min_obs: 30,
            simplex: SimplexOptions {
                f_tol: 1e-10,
                x_tol: 1e-7,
                max_iter: 4000,
                initial_step: Some(0.1),
                restarts: 1,
            },
            bfgs: BfgsOptions {
                max_iter: 200,
                ..BfgsOptions::default()
            },
        }
    }
}

/// `ln` of the sample variance, the pre-sample log-variance used by fits.
pub fn initial_logvar(returns: &MonthlySeries) -> f64 {
    mean_var(returns.values()).1.ln()
}

pub fn egarch_fit(returns: &MonthlySeries, orders: EgarchOrders) -> Result<EgarchFit> {
    egarch_fit_with(returns, orders, &EgarchFitOptions::default())
}

/// Maximum-likelihood fit: simplex search in the unconstrained space,
/// then a BFGS polish. Persistence is kept inside `Σ|φ| < 1`.
pub fn egarch_fit_with(returns: &MonthlySeries, orders: EgarchOrders, opts: &EgarchFitOptions) -> Result<EgarchFit> {
    let n = returns.len();
    if n < opts.min_obs {
        return Err(Error::InsufficientData {
            needed: opts.min_obs,
            got: n,
        });
    }
    let (_, var) = mean_var(returns.values());
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Fit("returns have zero variance".into()));
    }
    let init_logvar = var.ln();
    let r = returns.values();

    let mut bounds = vec![Bound::Free; 1 + orders.p + orders.o];
    bounds.extend(std::iter::repeat_n(Bound::Interval(-1.0, 1.0), orders.q));

    let nf = n as f64;
    let objective = |u: &[f64]| -> f64 {
        let theta = bounded_reparam(u, &bounds);
        let params = EgarchParams::from_slice(orders, &theta);
        if params.persistence() >= 1.0 {
            return f64::INFINITY;
        }
        match filter_core(&params, r, init_logvar) {
            Ok((_, ll)) => -ll / nf,
            Err(_) => f64::INFINITY,
        }
    };

    let start_for = |phi1: f64, kappa: f64| {
        let mut p = EgarchParams::zeros(orders);
        if let Some(f) = p.phi.first_mut() {
            *f = phi1;
        }
        p.kappa.iter_mut().take(1).for_each(|k| *k = kappa);
        p.nu = (1.0 - p.phi.iter().sum::<f64>()) * init_logvar;
        unbounded_reparam(&p.to_vec(), &bounds).expect("start point inside bounds")
    };
    let starts = [start_for(0.85, 0.15), start_for(0.5, 0.2), start_for(0.0, 0.1)];
    let x0 = starts
        .iter()
        .min_by(|a, b| objective(a).total_cmp(&objective(b)))
        .cloned()
        .unwrap();
    if !objective(&x0).is_finite() {
        return Err(Error::Fit("no feasible starting point".into()));
    }

    let coarse = minimize_simplex_with(&objective, &x0, &opts.simplex);
    let polish = minimize_bfgs_with(&objective, &coarse.x_star, &opts.bfgs);
    let (best, converged, termination) = if polish.f_star <= coarse.f_star {
        let ok = polish.converged || coarse.converged;
        let term = if polish.converged {
            polish.termination
        } else {
            coarse.termination
        };
        (polish.x_star, ok, term)
    } else {
        (coarse.x_star, coarse.converged, coarse.termination)
    };

    let params = EgarchParams::from_slice(orders, &bounded_reparam(&best, &bounds));
    let loglik = egarch_loglik(&params, orders, returns, init_logvar)?;
    let sigma = egarch_filter(&params, orders, returns, init_logvar)?;
    if !converged {
        log::warn!(
            "EGARCH{:?} fit did not converge ({termination:?})",
            (orders.p, orders.o, orders.q)
        );
    }
    Ok(EgarchFit {
        orders,
        aic: 2.0 * orders.n_params() as f64 - 2.0 * loglik,
        params,
        init_logvar,
        sigma,
        loglik,
        n_obs: n,
        converged,
        iterations: coarse.iterations + polish.iterations,
        termination,
    })
}

fn simulate_core(params: &EgarchParams, orders: EgarchOrders, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check(orders)?;
    if n == 0 {
        return Err(Error::Argument("simulation length must be >= 1".into()));
    }
    if params.persistence() >= 1.0 {
        return Err(Error::Argument(format!(
            "explosive persistence: Σ|φ| = {} >= 1",
            params.persistence()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = abs_mean_normal();
    let init = params.unconditional_logvar();
    let total = n + BURN_IN;
    let mut h = vec![0.0; total];
    let mut z = vec![0.0; total];
    for t in 0..total {
        let mut lv = params.nu;
        for (i, k) in params.kappa.iter().enumerate() {
            let zi: f64 = if t > i { z[t - i - 1] } else { 0.0 };
            lv += k * (zi.abs() - c);
        }
        for (j, d) in params.delta.iter().enumerate() {
            if t > j {
                lv += d * z[t - j - 1];
            }
        }
        for (k, p) in params.phi.iter().enumerate() {
            lv += p * if t > k { h[t - k - 1] } else { init };
        }
        h[t] = lv;
        z[t] = StandardNormal.sample(&mut rng);
    }
    let r = (BURN_IN..total).map(|t| (0.5 * h[t]).exp() * z[t]).collect();
    Ok((r, h.split_off(BURN_IN)))
}

/// Draws `n` returns `r_t = σ_t z_t` with standard normal `z_t`. The
/// recursion starts at the stationary log-variance and runs a burn-in
/// that is discarded.
pub fn egarch_simulate(
    params: &EgarchParams,
    orders: EgarchOrders,
    n: usize,
    seed: u64,
    start: MonthStamp,
) -> Result<MonthlySeries> {
    let (r, _) = simulate_core(params, orders, n, seed)?;
    MonthlySeries::new(start, r, "log-return")
}

/// Like [`egarch_simulate`], also returning the simulated ln σ²_t.
pub fn egarch_simulate_logvar(
    params: &EgarchParams,
    orders: EgarchOrders,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    simulate_core(params, orders, n, seed)
}

/// One row of an order-selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCandidate {
    pub orders: EgarchOrders,
    pub aic: Option<f64>,
}

/// Chooses `(p, o, q)` in `1..=max_order` by minimum AIC, breaking ties by
/// smaller total order and then lexicographically.
pub fn select_orders(returns: &MonthlySeries, max_order: usize) -> Result<EgarchOrders> {
    select_orders_with(returns, max_order, Execution::default()).map(|(o, _)| o)
}

pub fn select_orders_with(
    returns: &MonthlySeries,
    max_order: usize,
    exec: Execution,
) -> Result<(EgarchOrders, Vec<OrderCandidate>)> {
    if !(1..=3).contains(&max_order) {
        return Err(Error::Argument(format!("max_order {max_order} outside 1..=3")));
    }
    let grid: Vec<EgarchOrders> = (1..=max_order)
        .flat_map(|p| (1..=max_order).flat_map(move |o| (1..=max_order).map(move |q| EgarchOrders { p, o, q })))
        .collect();
    let table: Vec<OrderCandidate> = par::map_slice(exec, &grid, |&orders| OrderCandidate {
        orders,
        aic: egarch_fit(returns, orders)
            .ok()
            .map(|f| f.aic)
            .filter(|a| a.is_finite()),
    });
    let best = table
        .iter()
        .filter_map(|c| c.aic.map(|a| (a, c.orders)))
        .min_by(|(a1, o1), (a2, o2)| a1.total_cmp(a2).then(o1.total().cmp(&o2.total())).then(o1.cmp(o2)))
        .map(|(_, o)| o)
        .ok_or(Error::Selection)?;
    Ok((best, table))
}
