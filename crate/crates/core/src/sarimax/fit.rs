use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{
    minimize_bfgs_with, minimize_simplex_with, numeric_hessian, BfgsOptions, Bound, SimplexOptions, Termination,
};
use crate::par::{self, Execution};
use crate::series::{mean_var, MonthlySeries};

use super::forecast::{one_step, ForecastResult};
use super::kalman::{check_stationary, kalman_loglik, run_filter, StateSpace};
use super::poly::{coefficients_from_pacf, difference_values, pacf_from_coefficients};
use super::{ExogMatrix, SarimaxOrders, SarimaxParams};

/// Partial autocorrelations are kept inside this bound during fitting.
const PACF_LIMIT: f64 = 0.9999;

/// Training-period location and scale of one exogenous column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogScaling {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Asymptotic standard errors from the observed information of the
/// profile likelihood. `None` where the Hessian was not usable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardErrors {
    pub ar: Vec<Option<f64>>,
    pub ma: Vec<Option<f64>>,
    pub sar: Vec<Option<f64>>,
    pub sma: Vec<Option<f64>>,
    pub intercept: Option<f64>,
    /// In the columns' own units.
    pub gamma: Vec<Option<f64>>,
    /// Per training standard deviation of each column.
    pub gamma_standardized: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaxModel {
    pub orders: SarimaxOrders,
    /// Coefficients in the exogenous columns' own units.
    pub params: SarimaxParams,
    pub has_intercept: bool,
    pub gamma_standardized: Vec<f64>,
    pub scaling: Vec<ExogScaling>,
    pub std_errors: StandardErrors,
    pub loglik: f64,
    pub aic: f64,
    /// Observations entering the likelihood (after differencing).
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// Training sample.
    pub y: MonthlySeries,
    pub exog: ExogMatrix,
    /// One-step in-sample predictions.
    pub fitted: ForecastResult,
}

impl SarimaxModel {
    /// Model with fixed, user-supplied parameters on the given sample.
    pub fn from_params(
        orders: SarimaxOrders,
        params: SarimaxParams,
        y: &MonthlySeries,
        exog: &ExogMatrix,
    ) -> Result<Self> {
        orders.validate()?;
        params.check(&orders, exog.n_cols())?;
        check_stationary(&params)?;
        let exog = exog.slice(y.range())?;
        let fitted = one_step(&orders, &params, y, &exog)?;
        let loglik = if params.sigma2_eps > 0.0 {
            kalman_loglik(&orders, &params, y, &exog)?
        } else {
            f64::NAN
        };
        let has_intercept = !orders.is_differenced();
        let k = orders.n_arma() + exog.n_cols() + usize::from(has_intercept) + 1;
        Ok(Self {
            orders,
            gamma_standardized: params.gamma.clone(),
            scaling: exog
                .names()
                .iter()
                .map(|n| ExogScaling {
                    name: n.to_string(),
                    mean: 0.0,
                    sd: 1.0,
                })
                .collect(),
            has_intercept,
            std_errors: StandardErrors::default(),
            aic: 2.0 * k as f64 - 2.0 * loglik,
            loglik,
            n_obs: y.len() - orders.lost(),
            converged: true,
            iterations: 0,
            termination: Termination::Converged,
            y: y.clone(),
            exog,
            fitted,
            params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.orders.n_arma() + self.params.gamma.len() + usize::from(self.has_intercept) + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarimaxFitOptions {
    pub simplex: SimplexOptions,
    pub bfgs: BfgsOptions,
    pub std_errors: bool,
}

impl Default for SarimaxFitOptions {
    fn default() -> Self {
        Self {
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
            std_errors: true,
        }
    }
}

pub fn sarimax_fit(y: &MonthlySeries, exog: &ExogMatrix, orders: SarimaxOrders) -> Result<SarimaxModel> {
    sarimax_fit_with(y, exog, orders, &SarimaxFitOptions::default())
}

/// Everything the objective needs, built once per fit.
struct Problem {
    orders: SarimaxOrders,
    /// Differenced dependent variable.
    dy: Vec<f64>,
    /// Differenced design, column-major; intercept first when present.
    design: Vec<Vec<f64>>,
    /// Regression coefficients are optimized as multiples of this.
    y_scale: f64,
}

impl Problem {
    fn n_arma(&self) -> usize {
        self.orders.n_arma()
    }

    /// Splits an unconstrained vector into ARMA pacfs and scaled betas.
    fn natural(&self, u: &[f64]) -> (SarimaxParams, Vec<f64>) {
        let o = &self.orders;
        let interval = Bound::Interval(-PACF_LIMIT, PACF_LIMIT);
        let mut at = 0;
        let mut take = |n: usize| {
            let r: Vec<f64> = u[at..at + n].iter().map(|&x| interval.forward(x)).collect();
            at += n;
            coefficients_from_pacf(&r)
        };
        let params = SarimaxParams {
            ar: take(o.p),
            ma: take(o.q),
            sar: take(o.sp),
            sma: take(o.sq),
            ..SarimaxParams::default()
        };
        let beta = u[self.n_arma()..].iter().map(|b| b * self.y_scale).collect();
        (params, beta)
    }

    fn unconstrained(&self, params: &SarimaxParams, beta: &[f64]) -> Vec<f64> {
        let interval = Bound::Interval(-PACF_LIMIT, PACF_LIMIT);
        let mut u = Vec::new();
        for c in [&params.ar, &params.ma, &params.sar, &params.sma] {
            let r = pacf_from_coefficients(c).expect("start polynomial is stable");
            u.extend(r.iter().map(|&v| interval.inverse(v.clamp(-0.99, 0.99)).unwrap()));
        }
        u.extend(beta.iter().map(|b| b / self.y_scale));
        u
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut w = self.dy.clone();
        for (col, b) in self.design.iter().zip(beta) {
            for (wt, x) in w.iter_mut().zip(col) {
                *wt -= b * x;
            }
        }
        w
    }

    /// Profile log-likelihood with σ² concentrated out.
    fn profile(&self, params: &SarimaxParams, beta: &[f64]) -> Option<(f64, f64)> {
        let ss = StateSpace::from_orders(&self.orders, params);
        let out = run_filter(&ss, &self.residual(beta)).ok()?;
        let (sigma2, ll) = out.concentrated();
        (ll.is_finite() && sigma2 > 0.0).then_some((ll, sigma2))
    }

    /// Mean negative profile log-likelihood in the unconstrained space.
    fn objective(&self, u: &[f64]) -> f64 {
        let (params, beta) = self.natural(u);
        match self.profile(&params, &beta) {
            Some((ll, _)) => -ll / self.dy.len() as f64,
            None => f64::INFINITY,
        }
    }
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    if lag >= x.len() {
        return 0.0;
    }
    let (mean, _) = mean_var(x);
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if den <= 0.0 {
        return 0.0;
    }
    let num: f64 = (lag..x.len()).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
    num / den
}

/// Ordinary least squares, also used as the collinearity screen.
fn least_squares(design: &[Vec<f64>], y: &[f64], names: &[String]) -> Result<Vec<f64>> {
    let k = design.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, k, |i, j| design[j][i]);
    // Gram-Schmidt pass: a column that is (numerically) a combination of
    // earlier ones leaves no residual.
    for j in 0..k {
        let col = x.column(j).into_owned();
        let norm2 = col.norm_squared();
        if norm2 <= 1e-300 {
            return Err(Error::Fit(format!(
                "exogenous column `{}` is identically zero after differencing",
                names[j]
            )));
        }
        if j == 0 {
            continue;
        }
        let prev = x.columns(0, j).into_owned();
        let coef = (prev.transpose() * &prev)
            .cholesky()
            .map(|c| c.solve(&(prev.transpose() * &col)));
        if let Some(coef) = coef {
            let resid = &col - &prev * &coef;
            if resid.norm_squared() <= 1e-10 * norm2.max(1e-300) {
                let partners: Vec<&str> = (0..j)
                    .filter(|&i| coef[i].abs() > 1e-8)
                    .map(|i| names[i].as_str())
                    .collect();
                return Err(Error::Fit(format!(
                    "exogenous column `{}` is collinear with {}",
                    names[j],
                    partners.iter().map(|p| format!("`{p}`")).collect::<Vec<_>>().join(", ")
                )));
            }
        }
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::Fit("regression design is singular".into()))?;
    Ok(chol.solve(&xty).iter().copied().collect())
}

/// Maximum-likelihood fit. Exogenous columns are standardized with their
/// training mean and standard deviation before optimization; the returned
/// coefficients are converted back to the columns' own units.
pub fn sarimax_fit_with(
    y: &MonthlySeries,
    exog: &ExogMatrix,
    orders: SarimaxOrders,
    opts: &SarimaxFitOptions,
) -> Result<SarimaxModel> {
    orders.validate()?;
    if let Some((month, v)) = y.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain {
            month,
            message: format!("dependent value {v} is not finite"),
        });
    }
    let lost = orders.lost();
    let min_eff = 3 * orders.s;
    if y.len() < lost + min_eff {
        return Err(Error::InsufficientData {
            needed: lost + min_eff,
            got: y.len(),
        });
    }
    let exog = exog.slice(y.range())?;
    let raw_cols = exog.values_over(y.range())?;

    let mut scaling = Vec::with_capacity(raw_cols.len());
    let mut std_cols = Vec::with_capacity(raw_cols.len());
    for ((name, _), col) in exog.columns().zip(&raw_cols) {
        if let Some(v) = col.iter().find(|v| !v.is_finite()) {
            return Err(Error::DomainValue(format!(
                "exogenous column `{name}` has non-finite value {v}"
            )));
        }
        let (mean, var) = mean_var(col);
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::Fit(format!(
                "exogenous column `{name}` is constant and collinear with the intercept"
            )));
        }
        std_cols.push(col.iter().map(|v| (v - mean) / sd).collect::<Vec<f64>>());
        scaling.push(ExogScaling {
            name: name.to_string(),
            mean,
            sd,
        });
    }

    let has_intercept = !orders.is_differenced();
    let mut names: Vec<String> = Vec::new();
    let mut design: Vec<Vec<f64>> = Vec::new();
    if has_intercept {
        names.push("intercept".into());
        design.push(vec![1.0; y.len() - lost]);
    }
    for (s, col) in scaling.iter().zip(&std_cols) {
        names.push(s.name.clone());
        design.push(difference_values(col, orders.m, orders.sm, orders.s));
    }
    let dy = difference_values(y.values(), orders.m, orders.sm, orders.s);
    let beta0 = least_squares(&design, &dy, &names)?;
    let y_scale = {
        let (_, v) = mean_var(&dy);
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    };
    let problem = Problem {
        orders,
        dy,
        design,
        y_scale,
    };

    let resid = problem.residual(&beta0);
    let zero = SarimaxParams {
        ar: vec![0.0; orders.p],
        ma: vec![0.0; orders.q],
        sar: vec![0.0; orders.sp],
        sma: vec![0.0; orders.sq],
        ..SarimaxParams::default()
    };
    let mut seeded = zero.clone();
    if let Some(a) = seeded.ar.first_mut() {
        *a = autocorrelation(&resid, 1).clamp(-0.9, 0.9);
    }
    if let Some(a) = seeded.sar.first_mut() {
        *a = autocorrelation(&resid, orders.s).clamp(-0.9, 0.9);
    }
    let f = |u: &[f64]| problem.objective(u);
    let x0 = [
        problem.unconstrained(&zero, &beta0),
        problem.unconstrained(&seeded, &beta0),
    ]
    .into_iter()
    .min_by(|a, b| f(a).total_cmp(&f(b)))
    .unwrap();
    if !f(&x0).is_finite() {
        return Err(Error::Fit("likelihood is not finite at the starting point".into()));
    }

    let coarse = minimize_simplex_with(&f, &x0, &opts.simplex);
    let polish = minimize_bfgs_with(&f, &coarse.x_star, &opts.bfgs);
    let (best, converged, termination) = if polish.f_star <= coarse.f_star {
        let term = if polish.converged {
            polish.termination
        } else {
            coarse.termination
        };
        (polish.x_star, polish.converged || coarse.converged, term)
    } else {
        (coarse.x_star, coarse.converged, coarse.termination)
    };

    let (arma, beta) = problem.natural(&best);
    let (_, sigma2) = problem
        .profile(&arma, &beta)
        .ok_or_else(|| Error::Fit("likelihood not finite at the optimum".into()))?;
    let (intercept_std, gamma_std) = if has_intercept {
        (beta[0], beta[1..].to_vec())
    } else {
        (0.0, beta.clone())
    };
    let gamma: Vec<f64> = gamma_std.iter().zip(&scaling).map(|(g, s)| g / s.sd).collect();
    let intercept = if has_intercept {
        intercept_std
            - gamma_std
                .iter()
                .zip(&scaling)
                .map(|(g, s)| g * s.mean / s.sd)
                .sum::<f64>()
    } else {
        0.0
    };
    let params = SarimaxParams {
        gamma,
        intercept,
        sigma2_eps: sigma2,
        ..arma.clone()
    };

    let std_errors = if opts.std_errors {
        standard_errors(&problem, &arma, &beta, has_intercept, &scaling)
    } else {
        StandardErrors::default()
    };

    let loglik = kalman_loglik(&orders, &params, y, &exog)?;
    let fitted = one_step(&orders, &params, y, &exog)?;
    if !converged {
        log::warn!("SARIMAX{orders} fit did not converge ({termination:?})");
    }
    let mut model = SarimaxModel {
        orders,
        gamma_standardized: gamma_std,
        scaling,
        has_intercept,
        std_errors,
        loglik,
        aic: 0.0,
        n_obs: y.len() - lost,
        converged,
        iterations: coarse.iterations + polish.iterations,
        termination,
        y: y.clone(),
        exog,
        fitted,
        params,
    };
    model.aic = 2.0 * model.n_params() as f64 - 2.0 * loglik;
    Ok(model)
}

fn standard_errors(
    problem: &Problem,
    arma: &SarimaxParams,
    beta: &[f64],
    has_intercept: bool,
    scaling: &[ExogScaling],
) -> StandardErrors {
    let o = problem.orders;
    let mut theta: Vec<f64> = Vec::new();
    for c in [&arma.ar, &arma.ma, &arma.sar, &arma.sma] {
        theta.extend(c.iter());
    }
    let na = theta.len();
    theta.extend(beta.iter().map(|b| b / problem.y_scale));

    let split = |x: &[f64]| {
        let mut at = 0;
        let mut take = |n: usize| {
            let v = x[at..at + n].to_vec();
            at += n;
            v
        };
        let p = SarimaxParams {
            ar: take(o.p),
            ma: take(o.q),
            sar: take(o.sp),
            sma: take(o.sq),
            ..SarimaxParams::default()
        };
        let b: Vec<f64> = x[na..].iter().map(|v| v * problem.y_scale).collect();
        (p, b)
    };
    let nll = |x: &[f64]| {
        let (p, b) = split(x);
        if check_stationary(&p).is_err() {
            return f64::INFINITY;
        }
        problem.profile(&p, &b).map_or(f64::INFINITY, |(ll, _)| -ll)
    };

    let d = theta.len();
    let se: Vec<Option<f64>> = match numeric_hessian(&nll, &theta) {
        Ok(h) => {
            let m = DMatrix::from_fn(d, d, |i, j| h[i][j]);
            match m.try_inverse() {
                Some(inv) => (0..d)
                    .map(|i| {
                        let v = inv[(i, i)];
                        (v > 0.0 && v.is_finite()).then(|| v.sqrt())
                    })
                    .collect(),
                None => vec![None; d],
            }
        }
        Err(_) => vec![None; d],
    };

    let mut at = 0;
    let mut take = |n: usize| {
        let v = se[at..at + n].to_vec();
        at += n;
        v
    };
    let ar = take(o.p);
    let ma = take(o.q);
    let sar = take(o.sp);
    let sma = take(o.sq);
    let scaled: Vec<Option<f64>> = take(d - na)
        .into_iter()
        .map(|s| s.map(|v| v * problem.y_scale))
        .collect();
    let (intercept, gamma_standardized) = if has_intercept {
        (scaled[0], scaled[1..].to_vec())
    } else {
        (None, scaled)
    };
    StandardErrors {
        ar,
        ma,
        sar,
        sma,
        intercept,
        gamma: gamma_standardized
            .iter()
            .zip(scaling)
            .map(|(s, sc)| s.map(|v| v / sc.sd))
            .collect(),
        gamma_standardized,
    }
}

/// Inclusive `(lo, hi)` ranges for each order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderGrid {
    pub p: (usize, usize),
    pub m: (usize, usize),
    pub q: (usize, usize),
    #[serde(rename = "P")]
    pub sp: (usize, usize),
    #[serde(rename = "M")]
    pub sm: (usize, usize),
    #[serde(rename = "Q")]
    pub sq: (usize, usize),
    pub s: usize,
}

impl Default for OrderGrid {
    fn default() -> Self {
        Self {
            p: (0, 1),
            m: (0, 0),
            q: (0, 1),
            sp: (0, 1),
            sm: (0, 0),
            sq: (0, 1),
            s: 12,
        }
    }
}

impl OrderGrid {
    pub fn singleton(o: SarimaxOrders) -> Self {
        Self {
            p: (o.p, o.p),
            m: (o.m, o.m),
            q: (o.q, o.q),
            sp: (o.sp, o.sp),
            sm: (o.sm, o.sm),
            sq: (o.sq, o.sq),
            s: o.s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("p", self.p, 2),
            ("m", self.m, 1),
            ("q", self.q, 2),
            ("P", self.sp, 2),
            ("M", self.sm, 1),
            ("Q", self.sq, 2),
        ];
        for (name, (lo, hi), cap) in ranges {
            if lo > hi || hi > cap {
                return Err(Error::Argument(format!(
                    "order grid for {name} ({lo}..={hi}) must lie within 0..={cap}"
                )));
            }
        }
        if self.s != 12 {
            return Err(Error::Argument(format!("order grid needs s = 12, got {}", self.s)));
        }
        Ok(())
    }

    pub fn candidates(&self) -> Vec<SarimaxOrders> {
        let r = |(lo, hi): (usize, usize)| lo..=hi;
        let mut out = Vec::new();
        for p in r(self.p) {
            for m in r(self.m) {
                for q in r(self.q) {
                    for sp in r(self.sp) {
                        for sm in r(self.sm) {
                            for sq in r(self.sq) {
                                out.push(SarimaxOrders {
                                    p,
                                    m,
                                    q,
                                    sp,
                                    sm,
                                    sq,
                                    s: self.s,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Minimum-AIC orders over `grid`; ties go to the smaller total order,
/// then lexicographic `(p, m, q, P, M, Q)`.
pub fn select_sarimax_orders(y: &MonthlySeries, exog: &ExogMatrix, grid: &OrderGrid) -> Result<SarimaxOrders> {
    select_sarimax_orders_with(y, exog, grid, Execution::default()).map(|(o, _)| o)
}

pub fn select_sarimax_orders_with(
    y: &MonthlySeries,
    exog: &ExogMatrix,
    grid: &OrderGrid,
    exec: Execution,
) -> Result<(SarimaxOrders, Vec<(SarimaxOrders, Option<f64>)>)> {
    grid.validate()?;
    let opts = SarimaxFitOptions {
        std_errors: false,
        ..SarimaxFitOptions::default()
    };
    let candidates = grid.candidates();
    let table: Vec<(SarimaxOrders, Option<f64>)> = par::map_slice(exec, &candidates, |&o| {
        let aic = sarimax_fit_with(y, exog, o, &opts)
            .ok()
            .map(|m| m.aic)
            .filter(|a| a.is_finite());
        (o, aic)
    });
    let best = table
        .iter()
        .filter_map(|(o, a)| a.map(|a| (a, *o)))
        .min_by(|(a1, o1), (a2, o2)| {
            a1.total_cmp(a2)
                .then(o1.total().cmp(&o2.total()))
                .then(o1.key().cmp(&o2.key()))
        })
        .map(|(_, o)| o)
        .ok_or(Error::Selection)?;
    Ok((best, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sarimax::sarimax_simulate;
    use crate::series::MonthStamp;

    fn start() -> MonthStamp {
        MonthStamp::new(1990, 1).unwrap()
    }

    fn regressor(n: usize, seed: u64) -> MonthlySeries {
        let x: Vec<f64> = (0..n)
            .map(|t| (t as f64 * 0.37 + seed as f64).sin() * 3.0 + (t % 12) as f64 * 0.1)
            .collect();
        MonthlySeries::new(start(), x, "degC").unwrap()
    }

    #[test]
    fn ar1_with_exog_recovered() {
        let n = 1500;
        let exog = ExogMatrix::single("z", regressor(n, 1));
        let truth = SarimaxParams {
            ar: vec![0.7],
            gamma: vec![0.5],
            intercept: 2.0,
            sigma2_eps: 1.0,
            ..Default::default()
        };
        let orders = SarimaxOrders::arma(1, 0);
        let y = sarimax_simulate(&orders, &truth, &exog, start(), n, 11).unwrap();
        let m = sarimax_fit(&y, &exog, orders).unwrap();
        assert!((m.params.ar[0] - 0.7).abs() < 0.05, "{:?}", m.params);
        let se = m.std_errors.gamma[0].unwrap();
        assert!(se > 0.0 && se < 0.05, "{se}");
        assert!((m.params.gamma[0] - 0.5).abs() < 4.0 * se, "{:?} se {se}", m.params);
        assert!((m.params.intercept - 2.0).abs() < 0.5, "{:?}", m.params);
        let ll = kalman_loglik(&orders, &m.params, &y, &exog).unwrap();
        assert_eq!(ll, m.loglik);
        assert!((m.gamma_standardized[0] / m.scaling[0].sd - m.params.gamma[0]).abs() < 1e-12);
        assert_eq!(m.fitted.mean.len(), n);
    }

    #[test]
    fn no_exog_seasonal_fit_runs() {
        let orders = SarimaxOrders::new(1, 0, 0, 1, 0, 0, 12).unwrap();
        let truth = SarimaxParams {
            ar: vec![0.4],
            sar: vec![0.5],
            sigma2_eps: 0.5,
            ..Default::default()
        };
        let y = sarimax_simulate(&orders, &truth, &ExogMatrix::none(), start(), 240, 3).unwrap();
        let m = sarimax_fit(&y, &ExogMatrix::none(), orders).unwrap();
        assert!(m.params.gamma.is_empty());
        assert!(m.loglik.is_finite());
    }

    #[test]
    fn collinear_columns_named() {
        let n = 120;
        let a = regressor(n, 2);
        let b = a.map(|v| 2.0 * v + 1.0);
        let exog = ExogMatrix::new(vec![("tasmax".into(), a.clone()), ("tasmax_f".into(), b)]).unwrap();
        let y = a.map(|v| v * 0.1);
        let err = sarimax_fit(&y, &exog, SarimaxOrders::arma(1, 0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tasmax_f") && msg.contains("`tasmax`"), "{msg}");

        let constant = ExogMatrix::single("flat", MonthlySeries::new(start(), vec![3.0; n], "x").unwrap());
        let err = sarimax_fit(&y, &constant, SarimaxOrders::arma(1, 0)).unwrap_err();
        assert!(err.to_string().contains("flat"));
    }

    #[test]
    fn short_series_rejected() {
        let y = MonthlySeries::new(start(), vec![0.1; 20], "x").unwrap();
        assert!(matches!(
            sarimax_fit(&y, &ExogMatrix::none(), SarimaxOrders::arma(1, 0)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn grid_rules() {
        assert_eq!(OrderGrid::default().candidates().len(), 16);
        let bad = OrderGrid {
            p: (0, 3),
            ..OrderGrid::default()
        };
        assert!(bad.validate().is_err());
        let o = SarimaxOrders::new(1, 0, 0, 1, 0, 0, 12).unwrap();
        assert_eq!(OrderGrid::singleton(o).candidates(), vec![o]);
    }

    #[test]
    fn singleton_selection() {
        let orders = SarimaxOrders::arma(1, 0);
        let truth = SarimaxParams {
            ar: vec![0.5],
            sigma2_eps: 1.0,
            ..Default::default()
        };
        let y = sarimax_simulate(&orders, &truth, &ExogMatrix::none(), start(), 120, 4).unwrap();
        let got = select_sarimax_orders(&y, &ExogMatrix::none(), &OrderGrid::singleton(orders)).unwrap();
        assert_eq!(got, orders);
    }
}
