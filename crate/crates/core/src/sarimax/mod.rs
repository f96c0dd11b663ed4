//! Seasonal ARIMA with exogenous regressors, in regression-with-ARMA-errors
//! form:
//!
//! ```text
//! y_t = c + z_t γ + u_t
//! A(Lˢ) a(L) (1 - L)^m (1 - Lˢ)^M u_t = B(Lˢ) b(L) ε_t,   ε_t ~ N(0, σ²)
//! ```
//!
//! Every lag polynomial is written `1 - c₁L - c₂L² - …` and stores `c`.
//! The intercept `c` only enters when the model is not differenced.

mod fit;
mod forecast;
mod kalman;
mod poly;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{MonthRange, MonthStamp, MonthlySeries};

pub use fit::{
    sarimax_fit, sarimax_fit_with, select_sarimax_orders, select_sarimax_orders_with, ExogScaling, OrderGrid,
    SarimaxFitOptions, SarimaxModel, StandardErrors,
};
pub use forecast::{
    prediction_interval, sarimax_forecast, sarimax_forecast_from, sarimax_predict, sarimax_simulate, ForecastResult,
};
pub use kalman::{kalman_loglik, stationary_covariance, StateSpace};
pub use poly::{
    coefficients_from_pacf, difference, differencing_polynomial, expand_polynomials, pacf_from_coefficients,
    LagPolynomial,
};

/// Stage of the calendar a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Historical,
    Validation,
    Forecast,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Historical => "historical",
            Phase::Validation => "validation",
            Phase::Forecast => "forecast",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "historical" => Ok(Phase::Historical),
            "validation" => Ok(Phase::Validation),
            "forecast" => Ok(Phase::Forecast),
            other => Err(Error::Argument(format!("unknown phase `{other}`"))),
        }
    }
}

/// `(p, m, q)(P, M, Q, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SarimaxOrders {
    pub p: usize,
    pub m: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub sp: usize,
    #[serde(rename = "M")]
    pub sm: usize,
    #[serde(rename = "Q")]
    pub sq: usize,
    pub s: usize,
}

impl SarimaxOrders {
    pub fn new(p: usize, m: usize, q: usize, sp: usize, sm: usize, sq: usize, s: usize) -> Result<Self> {
        let o = Self { p, m, q, sp, sm, sq, s };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::Argument("seasonal period must be >= 1".into()));
        }
        if self.m + self.sm > 2 {
            return Err(Error::Argument(format!(
                "total differencing m + M = {} exceeds 2",
                self.m + self.sm
            )));
        }
        Ok(())
    }

    /// Pure ARMA(p, q) with no seasonal part.
    pub fn arma(p: usize, q: usize) -> Self {
        Self {
            p,
            m: 0,
            q,
            sp: 0,
            sm: 0,
            sq: 0,
            s: 12,
        }
    }

    pub fn is_differenced(&self) -> bool {
        self.m + self.sm > 0
    }

    /// Observations consumed by differencing.
    pub fn lost(&self) -> usize {
        self.m + self.sm * self.s
    }

    pub fn ar_degree(&self) -> usize {
        self.p + self.s * self.sp
    }

    pub fn ma_degree(&self) -> usize {
        self.q + self.s * self.sq
    }

    /// State dimension of the Harvey representation.
    pub fn state_dim(&self) -> usize {
        self.ar_degree().max(self.ma_degree() + 1)
    }

    pub fn n_arma(&self) -> usize {
        self.p + self.q + self.sp + self.sq
    }

    pub fn total(&self) -> usize {
        self.p + self.m + self.q + self.sp + self.sm + self.sq
    }

    fn key(&self) -> (usize, usize, usize, usize, usize, usize) {
        (self.p, self.m, self.q, self.sp, self.sm, self.sq)
    }
}

impl Default for SarimaxOrders {
    fn default() -> Self {
        Self {
            p: 1,
            m: 0,
            q: 1,
            sp: 1,
            sm: 0,
            sq: 1,
            s: 12,
        }
    }
}

impl fmt::Display for SarimaxOrders {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{},{})",
            self.p, self.m, self.q, self.sp, self.sm, self.sq, self.s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SarimaxParams {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    /// Coefficients on the exogenous columns, in the columns' own units.
    pub gamma: Vec<f64>,
    /// Regression constant; ignored by differenced models.
    #[serde(default)]
    pub intercept: f64,
    pub sigma2_eps: f64,
}

impl SarimaxParams {
    pub fn check(&self, orders: &SarimaxOrders, n_exog: usize) -> Result<()> {
        let lens = [
            ("ar", self.ar.len(), orders.p),
            ("ma", self.ma.len(), orders.q),
            ("sar", self.sar.len(), orders.sp),
            ("sma", self.sma.len(), orders.sq),
            ("gamma", self.gamma.len(), n_exog),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Argument(format!(
                    "{name} has {got} coefficients, expected {want}"
                )));
            }
        }
        if !(self.sigma2_eps >= 0.0) || !self.sigma2_eps.is_finite() {
            return Err(Error::Argument(format!(
                "innovation variance {} must be finite and >= 0",
                self.sigma2_eps
            )));
        }
        let finite = self
            .ar
            .iter()
            .chain(&self.ma)
            .chain(&self.sar)
            .chain(&self.sma)
            .chain(&self.gamma)
            .chain(std::iter::once(&self.intercept))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument("SARIMAX coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Named, calendar-indexed regressor columns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExogMatrix {
    columns: Vec<(String, MonthlySeries)>,
}

impl ExogMatrix {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(columns: Vec<(String, MonthlySeries)>) -> Result<Self> {
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Argument(format!("duplicate exogenous column `{name}`")));
            }
        }
        Ok(Self { columns })
    }

    pub fn single(name: &str, series: MonthlySeries) -> Self {
        Self {
            columns: vec![(name.to_string(), series)],
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column(&self, j: usize) -> &MonthlySeries {
        &self.columns[j].1
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &MonthlySeries)> {
        self.columns.iter().map(|(n, s)| (n.as_str(), s))
    }

    /// Column values over `range`; every column must cover it.
    pub fn values_over(&self, range: MonthRange) -> Result<Vec<Vec<f64>>> {
        self.columns
            .iter()
            .map(|(name, s)| {
                s.slice(range).map(MonthlySeries::into_values).map_err(|_| {
                    Error::Argument(format!(
                        "exogenous column `{name}` ({}) does not cover {range}",
                        s.range()
                    ))
                })
            })
            .collect()
    }

    pub fn slice(&self, range: MonthRange) -> Result<Self> {
        let cols = self.values_over(range)?;
        Ok(Self {
            columns: self
                .columns
                .iter()
                .zip(cols)
                .map(|((n, s), v)| {
                    (
                        n.clone(),
                        MonthlySeries::new(range.first, v, s.unit()).expect("non-empty range"),
                    )
                })
                .collect(),
        })
    }
}

pub(crate) fn months_after(end: MonthStamp, horizon: usize) -> Result<MonthRange> {
    if horizon == 0 {
        return Err(Error::Argument("forecast horizon must be >= 1".into()));
    }
    MonthRange::new(end.succ(), end.add_months(horizon as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_validation() {
        assert!(SarimaxOrders::new(1, 2, 0, 0, 1, 0, 12).is_err());
        assert!(SarimaxOrders::new(1, 0, 0, 0, 0, 0, 0).is_err());
        let o = SarimaxOrders::default();
        assert_eq!(o.state_dim(), 14);
        assert_eq!(o.to_string(), "(1,0,1)(1,0,1,12)");
        let json = serde_json::to_string(&o).unwrap();
        assert!(json.contains("\"P\":1"));
        assert_eq!(serde_json::from_str::<SarimaxOrders>(&json).unwrap(), o);
    }

    #[test]
    fn phase_round_trip() {
        for p in [Phase::Historical, Phase::Validation, Phase::Forecast] {
            assert_eq!(p.as_str().parse::<Phase>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{p}\""));
        }
    }

    #[test]
    fn params_check() {
        let o = SarimaxOrders::arma(1, 0);
        let mut p = SarimaxParams {
            ar: vec![0.3],
            sigma2_eps: 1.0,
            ..Default::default()
        };
        assert!(p.check(&o, 0).is_ok());
        assert!(p.check(&o, 1).is_err());
        p.sigma2_eps = -1.0;
        assert!(p.check(&o, 0).is_err());
    }
}
