//! Black-Scholes valuation of the MSP guarantee as a European put.

mod mc;
mod normal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Scenario;
use crate::par::{self, Execution};
use crate::sarimax::Phase;
use crate::series::{MonthRange, MonthStamp, MonthlySeries};

pub use mc::{monte_carlo_put, McEstimate};
pub use normal::{erfc, norm_cdf, norm_pdf};

/// Default continuously compounded risk-free rate, per annum.
pub const DEFAULT_RATE: f64 = 0.07;
/// Default maturity in years (one MSP cycle).
pub const DEFAULT_MATURITY: f64 = 1.0;
/// Volatility floor applied to forecasts before pricing.
pub const VOL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingInputs {
    /// Spot price S0, INR per quintal.
    pub spot: f64,
    /// Strike K (the MSP), INR per quintal.
    pub strike: f64,
    /// Continuously compounded rate per annum.
    pub rate: f64,
    /// Annualized volatility.
    pub vol: f64,
    /// Years to maturity.
    pub maturity: f64,
}

impl PricingInputs {
    fn validate(&self) -> Result<()> {
        let finite = [self.spot, self.strike, self.rate, self.vol, self.maturity]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument(format!("non-finite pricing input {self:?}")));
        }
        if self.spot <= 0.0 || self.strike <= 0.0 || self.maturity <= 0.0 {
            return Err(Error::Argument(format!(
                "spot, strike and maturity must be positive: {self:?}"
            )));
        }
        if self.vol < 0.0 {
            return Err(Error::Argument(format!("negative volatility {}", self.vol)));
        }
        Ok(())
    }

    fn discounted_strike(&self) -> f64 {
        self.strike * (-self.rate * self.maturity).exp()
    }
}

/// A priced option. With zero volatility `d1 = d2 = ±∞` (the sign of the
/// forward moneyness) or NaN exactly at the money forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub price: f64,
    pub d1: f64,
    pub d2: f64,
    pub inputs: PricingInputs,
}

pub type PutQuote = OptionQuote;

fn d_terms(inp: &PricingInputs) -> (f64, f64) {
    let sd = inp.vol * inp.maturity.sqrt();
    let d1 = ((inp.spot / inp.strike).ln() + (inp.rate + 0.5 * inp.vol * inp.vol) * inp.maturity) / sd;
    (d1, d1 - sd)
}

/// European put: `P = K e^{-rT} Φ(-d2) - S0 Φ(-d1)`.
pub fn bs_put(inputs: PricingInputs) -> Result<PutQuote> {
    inputs.validate()?;
    let kd = inputs.discounted_strike();
    let (d1, d2, raw) = if inputs.vol == 0.0 {
        let (d1, d2) = d_terms(&inputs);
        (d1, d2, (kd - inputs.spot).max(0.0))
    } else {
        let (d1, d2) = d_terms(&inputs);
        (d1, d2, kd * norm_cdf(-d2) - inputs.spot * norm_cdf(-d1))
    };
    if !raw.is_finite() {
        return Err(Error::Numeric(format!("put price not finite for {inputs:?}")));
    }
    // Rounding can leave the price a few ulps outside its no-arbitrage bounds.
    let price = raw.clamp((kd - inputs.spot).max(0.0), kd);
    Ok(OptionQuote { price, d1, d2, inputs })
}

/// European call: `C = S0 Φ(d1) - K e^{-rT} Φ(d2)`.
pub fn bs_call(inputs: PricingInputs) -> Result<OptionQuote> {
    inputs.validate()?;
    let kd = inputs.discounted_strike();
    let (d1, d2) = d_terms(&inputs);
    let raw = if inputs.vol == 0.0 {
        (inputs.spot - kd).max(0.0)
    } else {
        inputs.spot * norm_cdf(d1) - kd * norm_cdf(d2)
    };
    if !raw.is_finite() {
        return Err(Error::Numeric(format!("call price not finite for {inputs:?}")));
    }
    let price = raw.clamp((inputs.spot - kd).max(0.0), inputs.spot);
    Ok(OptionQuote { price, d1, d2, inputs })
}

/// Monthly to per-annum volatility, `σ·√12`.
pub fn annualize_vol(sigma_monthly: f64) -> Result<f64> {
    if !(sigma_monthly >= 0.0) {
        return Err(Error::Argument(format!(
            "monthly volatility {sigma_monthly} must be non-negative"
        )));
    }
    Ok(sigma_monthly * 12f64.sqrt())
}

pub fn deannualize_vol(sigma_annual: f64) -> Result<f64> {
    if !(sigma_annual >= 0.0) {
        return Err(Error::Argument(format!(
            "annual volatility {sigma_annual} must be non-negative"
        )));
    }
    Ok(sigma_annual / 12f64.sqrt())
}

/// One put quote per month, with the scenario and phase labels carried
/// along for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumSeries {
    pub months: MonthRange,
    pub quotes: Vec<PutQuote>,
    pub scenario: Option<Scenario>,
    pub phases: Vec<Phase>,
}

impl PremiumSeries {
    pub fn premiums(&self) -> MonthlySeries {
        MonthlySeries::new(
            self.months.first,
            self.quotes.iter().map(|q| q.price).collect(),
            "INR-per-quintal",
        )
        .expect("premium series is never empty")
    }

    pub fn with_labels(mut self, scenario: Option<Scenario>, phases: Vec<Phase>) -> Result<Self> {
        if phases.len() != self.quotes.len() {
            return Err(Error::Argument(format!(
                "{} phase tags for {} quotes",
                phases.len(),
                self.quotes.len()
            )));
        }
        self.scenario = scenario;
        self.phases = phases;
        Ok(self)
    }

    pub fn month_at(&self, i: usize) -> MonthStamp {
        self.months.first.add_months(i as i64)
    }
}

/// Prices a put for every month of the aligned paths. `vol_forecast` is
/// monthly; it is annualized before pricing.
pub fn premium_series(
    spot_path: &MonthlySeries,
    msp_path: &MonthlySeries,
    vol_forecast: &MonthlySeries,
    rate: f64,
    maturity_years: f64,
) -> Result<PremiumSeries> {
    premium_series_with(
        spot_path,
        msp_path,
        vol_forecast,
        rate,
        maturity_years,
        Execution::default(),
    )
}

pub fn premium_series_with(
    spot_path: &MonthlySeries,
    msp_path: &MonthlySeries,
    vol_forecast: &MonthlySeries,
    rate: f64,
    maturity_years: f64,
    exec: Execution,
) -> Result<PremiumSeries> {
    let range = spot_path.range();
    for (name, s) in [("msp", msp_path), ("volatility", vol_forecast)] {
        if s.range() != range {
            return Err(Error::Argument(format!(
                "{name} series covers {} but spot covers {range}",
                s.range()
            )));
        }
    }
    let quotes = par::map_indexed(exec, range.len(), |i| {
        let vol = annualize_vol(vol_forecast.values()[i])?;
        bs_put(PricingInputs {
            spot: spot_path.values()[i],
            strike: msp_path.values()[i],
            rate,
            vol,
            maturity: maturity_years,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(PremiumSeries {
        months: range,
        phases: vec![Phase::Forecast; quotes.len()],
        quotes,
        scenario: None,
    })
}
