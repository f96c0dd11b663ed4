use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{BandSeries, MonthStamp, MonthlySeries, WidthRule};

use super::fit::SarimaxModel;
use super::kalman::{check_stationary, regression_residual, run_filter, StateSpace};
use super::poly::{difference_values, differencing_polynomial};
use super::{months_after, ExogMatrix, Phase, SarimaxOrders, SarimaxParams};

const SIM_BURN_IN: usize = 500;

/// Predicted levels with their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub mean: MonthlySeries,
    pub se: MonthlySeries,
    pub phase: Phase,
}

impl ForecastResult {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }
}

/// One-step-ahead predictions of every observation after the first
/// `orders.lost()`, from a filter run with fixed parameters.
pub(crate) fn one_step(
    orders: &SarimaxOrders,
    params: &SarimaxParams,
    y: &MonthlySeries,
    exog: &ExogMatrix,
) -> Result<ForecastResult> {
    let lost = orders.lost();
    if y.len() <= lost {
        return Err(Error::InsufficientData {
            needed: lost + 1,
            got: y.len(),
        });
    }
    let u = regression_residual(params, y, exog)?;
    let w = difference_values(&u, orders.m, orders.sm, orders.s);
    let out = run_filter(&StateSpace::from_orders(orders, params), &w)?;
    let mean: Vec<f64> = out
        .v
        .iter()
        .enumerate()
        .map(|(i, v)| y.values()[i + lost] - v)
        .collect();
    let se: Vec<f64> = out.f.iter().map(|f| (params.sigma2_eps * f).sqrt()).collect();
    let start = y.month_at(lost);
    Ok(ForecastResult {
        mean: MonthlySeries::new(start, mean, y.unit())?,
        se: MonthlySeries::new(start, se, y.unit())?,
        phase: Phase::Historical,
    })
}

/// One-step predictions over `y` (which may extend past the training
/// sample) with the model's parameters held fixed.
pub fn sarimax_predict(model: &SarimaxModel, y: &MonthlySeries, exog: &ExogMatrix) -> Result<ForecastResult> {
    check_exog_names(model, exog)?;
    one_step(&model.orders, &model.params, y, exog)
}

/// Forecasts `horizon` months past the end of the training sample.
pub fn sarimax_forecast(model: &SarimaxModel, exog_future: &ExogMatrix, horizon: usize) -> Result<ForecastResult> {
    forecast_after(model, &model.y, &model.exog, exog_future, horizon)
}

/// Filters `y_obs` with the model's parameters, then forecasts `horizon`
/// months past its end.
pub fn sarimax_forecast_from(
    model: &SarimaxModel,
    y_obs: &MonthlySeries,
    exog_obs: &ExogMatrix,
    exog_future: &ExogMatrix,
    horizon: usize,
) -> Result<ForecastResult> {
    check_exog_names(model, exog_obs)?;
    forecast_after(model, y_obs, exog_obs, exog_future, horizon)
}

fn check_exog_names(model: &SarimaxModel, exog: &ExogMatrix) -> Result<()> {
    if exog.names() != model.exog.names() {
        return Err(Error::Argument(format!(
            "exogenous columns {:?} do not match the model's {:?}",
            exog.names(),
            model.exog.names()
        )));
    }
    Ok(())
}

/// Propagates the state of `(level lags, ARMA state)` forward. The lags
/// of the undifferenced error are known at the origin, so the differencing
/// is undone inside the state and the variance carries through exactly.
fn forecast_after(
    model: &SarimaxModel,
    y_obs: &MonthlySeries,
    exog_obs: &ExogMatrix,
    exog_future: &ExogMatrix,
    horizon: usize,
) -> Result<ForecastResult> {
    check_exog_names(model, exog_future)?;
    let months = months_after(y_obs.end(), horizon)?;
    let future = exog_future.values_over(months)?;
    let (orders, params) = (&model.orders, &model.params);
    let lost = orders.lost();
    if y_obs.len() <= lost {
        return Err(Error::InsufficientData {
            needed: lost + 1,
            got: y_obs.len(),
        });
    }

    let u = regression_residual(params, y_obs, exog_obs)?;
    let w = difference_values(&u, orders.m, orders.sm, orders.s);
    let ss = StateSpace::from_orders(orders, params);
    let out = run_filter(&ss, &w)?;

    let k = ss.dim;
    let delta = differencing_polynomial(orders.m, orders.sm, orders.s).coefficients;
    let d = delta.len();
    let dim = k + d;

    let mut trans = DMatrix::<f64>::zeros(dim, dim);
    let t = ss.transition();
    trans.view_mut((0, 0), (k, k)).copy_from(&t);
    let mut z = DVector::<f64>::zeros(dim);
    z[0] = 1.0;
    for (i, di) in delta.iter().enumerate() {
        z[k + i] = *di;
    }
    if d > 0 {
        trans.row_mut(k).copy_from(&z.transpose());
        for i in 1..d {
            trans[(k + i, k + i - 1)] = 1.0;
        }
    }
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    q.view_mut((0, 0), (k, k)).copy_from(&ss.state_cov(1.0));

    let mut state = DVector::<f64>::zeros(dim);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..k {
        state[i] = out.a_next[i];
        for j in 0..k {
            cov[(i, j)] = out.p_next[i * k + j];
        }
    }
    let n = u.len();
    for i in 0..d {
        state[k + i] = u[n - 1 - i];
    }

    let mut mean = Vec::with_capacity(horizon);
    let mut se = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let regression = params.intercept + future.iter().zip(&params.gamma).map(|(c, g)| g * c[h]).sum::<f64>();
        let u_hat = z.dot(&state);
        let var = (z.transpose() * &cov * &z)[(0, 0)].max(0.0);
        mean.push(regression + u_hat);
        se.push((params.sigma2_eps * var).sqrt());
        state = &trans * &state;
        cov = &trans * &cov * trans.transpose() + &q;
    }
    if let Some(bad) = mean.iter().chain(&se).position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "forecast is not finite at {}",
            months.first.add_months((bad % horizon) as i64)
        )));
    }
    Ok(ForecastResult {
        mean: MonthlySeries::new(months.first, mean, y_obs.unit())?,
        se: MonthlySeries::new(months.first, se, y_obs.unit())?,
        phase: Phase::Forecast,
    })
}

/// `mean ± n_se · se`.
pub fn prediction_interval(fc: &ForecastResult, n_se: f64) -> Result<BandSeries> {
    if !(n_se > 0.0) {
        return Err(Error::Argument(format!("n_se must be > 0, got {n_se}")));
    }
    let lower: Vec<f64> = fc
        .mean
        .values()
        .iter()
        .zip(fc.se.values())
        .map(|(m, s)| m - n_se * s)
        .collect();
    let upper: Vec<f64> = fc
        .mean
        .values()
        .iter()
        .zip(fc.se.values())
        .map(|(m, s)| m + n_se * s)
        .collect();
    Ok(BandSeries {
        center: fc.mean.clone(),
        lower: MonthlySeries::new(fc.mean.start(), lower, fc.mean.unit())?,
        upper: MonthlySeries::new(fc.mean.start(), upper, fc.mean.unit())?,
        window: None,
        width_rule: WidthRule::KSigma,
    })
}

/// Draws `n` months of `y` starting at `start`. The ARMA part runs a
/// discarded burn-in; integration starts from zero lags.
pub fn sarimax_simulate(
    orders: &SarimaxOrders,
    params: &SarimaxParams,
    exog: &ExogMatrix,
    start: MonthStamp,
    n: usize,
    seed: u64,
) -> Result<MonthlySeries> {
    orders.validate()?;
    params.check(orders, exog.n_cols())?;
    check_stationary(params)?;
    if n == 0 {
        return Err(Error::Argument("simulation length must be >= 1".into()));
    }
    let months = crate::series::MonthRange::new(start, start.add_months(n as i64 - 1))?;
    let cols = exog.values_over(months)?;
    let ss = StateSpace::from_orders(orders, params);
    let sd = params.sigma2_eps.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + SIM_BURN_IN;
    let mut eps = vec![0.0; total];
    let mut w = vec![0.0; total];
    for t in 0..total {
        let e: f64 = StandardNormal.sample(&mut rng);
        eps[t] = sd * e;
        let mut v = eps[t];
        for (i, phi) in ss.phi.iter().enumerate() {
            if t > i {
                v += phi * w[t - i - 1];
            }
        }
        for (j, th) in ss.theta.iter().enumerate() {
            if t > j {
                v += th * eps[t - j - 1];
            }
        }
        w[t] = v;
    }
    let delta = differencing_polynomial(orders.m, orders.sm, orders.s).coefficients;
    let mut u = vec![0.0; n];
    for t in 0..n {
        let mut v = w[SIM_BURN_IN + t];
        for (i, di) in delta.iter().enumerate() {
            if t > i {
                v += di * u[t - i - 1];
            }
        }
        u[t] = v;
    }
    let y = (0..n)
        .map(|t| params.intercept + cols.iter().zip(&params.gamma).map(|(c, g)| g * c[t]).sum::<f64>() + u[t])
        .collect();
    MonthlySeries::new(start, y, "value")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> MonthStamp {
        MonthStamp::new(1990, 1).unwrap()
    }

    fn series(v: Vec<f64>) -> MonthlySeries {
        MonthlySeries::new(start(), v, "x").unwrap()
    }

    #[test]
    fn interval_examples() {
        let fc = ForecastResult {
            mean: series(vec![5.0, 0.0]),
            se: series(vec![2.0, 1.0]),
            phase: Phase::Forecast,
        };
        let b = prediction_interval(&fc, 1.0).unwrap();
        assert_eq!((b.lower.values()[0], b.upper.values()[0]), (3.0, 7.0));
        let b = prediction_interval(&fc, 2.0).unwrap();
        assert_eq!((b.lower.values()[1], b.upper.values()[1]), (-2.0, 2.0));
        let flat = ForecastResult {
            se: series(vec![0.0, 0.0]),
            ..fc.clone()
        };
        let b = prediction_interval(&flat, 1.0).unwrap();
        assert_eq!(b.lower, b.center);
        assert_eq!(b.upper, b.center);
        assert!(prediction_interval(&fc, 0.0).is_err());
    }

    #[test]
    fn ar1_forecast_closed_form() {
        let a = 0.6;
        let orders = SarimaxOrders::arma(1, 0);
        let params = SarimaxParams {
            ar: vec![a],
            sigma2_eps: 1.0,
            ..Default::default()
        };
        let y = series(vec![0.3, -0.5, 1.2, 2.0]);
        let model = SarimaxModel::from_params(orders, params, &y, &ExogMatrix::none()).unwrap();
        let fc = sarimax_forecast(&model, &ExogMatrix::none(), 6).unwrap();
        for (h, m) in fc.mean.values().iter().enumerate() {
            assert!((m - a.powi(h as i32 + 1) * 2.0).abs() < 1e-12);
        }
        assert_eq!(fc.mean.start(), MonthStamp::new(1990, 5).unwrap());
        assert!(fc.se.values().windows(2).all(|w| w[1] >= w[0]));
        assert!(sarimax_forecast(&model, &ExogMatrix::none(), 0).is_err());
    }

    #[test]
    fn deterministic_regression_forecast() {
        let z = series((0..40).map(|t| (t as f64 * 0.5).cos()).collect());
        let exog = ExogMatrix::single("z", z.clone());
        let params = SarimaxParams {
            gamma: vec![1.7],
            sigma2_eps: 0.0,
            ..Default::default()
        };
        let y = series(z.values()[..30].iter().map(|v| 1.7 * v).collect());
        let model = SarimaxModel::from_params(SarimaxOrders::arma(0, 0), params, &y, &exog).unwrap();
        let fc = sarimax_forecast(&model, &exog, 10).unwrap();
        for (h, m) in fc.mean.values().iter().enumerate() {
            assert_eq!(*m, 1.7 * z.values()[30 + h]);
        }
        assert!(fc.se.values().iter().all(|&s| s == 0.0));
        // Future exog too short.
        assert!(sarimax_forecast(&model, &exog, 11).is_err());
    }

    #[test]
    fn integrated_forecast_starts_from_last_level() {
        // Random walk: the one-step forecast equals the last level.
        let orders = SarimaxOrders::new(0, 1, 0, 0, 0, 0, 12).unwrap();
        let params = SarimaxParams {
            sigma2_eps: 0.25,
            ..Default::default()
        };
        let y = series(vec![1.0, 1.5, 1.2, 2.2]);
        let model = SarimaxModel::from_params(orders, params, &y, &ExogMatrix::none()).unwrap();
        let fc = sarimax_forecast(&model, &ExogMatrix::none(), 3).unwrap();
        assert!(fc.mean.values().iter().all(|m| (m - 2.2).abs() < 1e-12));
        for (h, s) in fc.se.values().iter().enumerate() {
            assert!((s - (0.25 * (h + 1) as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn in_sample_prediction_matches_recursion() {
        let orders = SarimaxOrders::arma(1, 0);
        let params = SarimaxParams {
            ar: vec![0.5],
            intercept: 1.0,
            sigma2_eps: 2.0,
            ..Default::default()
        };
        let y = series(vec![1.0, 2.0, 0.5, 1.5]);
        let p = one_step(&orders, &params, &y, &ExogMatrix::none()).unwrap();
        assert!((p.mean.values()[0] - 1.0).abs() < 1e-12);
        for t in 1..4 {
            let expect = 1.0 + 0.5 * (y.values()[t - 1] - 1.0);
            assert!((p.mean.values()[t] - expect).abs() < 1e-12);
            assert!((p.se.values()[t] - 2f64.sqrt()).abs() < 1e-12);
        }
        assert!((p.se.values()[0] - (2.0 / 0.75f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn simulation_reproducible() {
        let orders = SarimaxOrders::new(1, 1, 1, 0, 0, 0, 12).unwrap();
        let params = SarimaxParams {
            ar: vec![0.3],
            ma: vec![0.2],
            sigma2_eps: 1.0,
            ..Default::default()
        };
        let a = sarimax_simulate(&orders, &params, &ExogMatrix::none(), start(), 50, 9).unwrap();
        let b = sarimax_simulate(&orders, &params, &ExogMatrix::none(), start(), 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
    }
}
