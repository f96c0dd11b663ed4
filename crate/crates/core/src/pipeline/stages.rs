use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{MspPolicy, PipelineConfig, SpotPolicy};
use crate::egarch::{egarch_fit, select_orders_with, EgarchFit};
use crate::error::{Error, Result};
use crate::ingest::{
    align_panel, anomalies_with, historical_join_end, load_bundle, read_price_csv, AlignmentReport, ClimatePanel,
    EnsembleMean, PriceReadOptions, Scenario, Variable,
};
use crate::pricing::{bs_put, monte_carlo_put, premium_series_with, PremiumSeries, VOL_FLOOR};
use crate::sarimax::{
    sarimax_fit, sarimax_forecast_from, sarimax_predict, select_sarimax_orders_with, ExogMatrix, Phase, SarimaxModel,
    SarimaxOrders,
};
use crate::series::{log_returns, mann_kendall, ols_trend, smooth, MonthRange, MonthStamp, MonthlySeries, TrendResult};

pub const INGEST_FILE: &str = "ingest.json";
pub const TREND_FILE: &str = "trend.csv";
pub const EGARCH_FILE: &str = "egarch_model.json";
pub const SARIMAX_FILE: &str = "sarimax_model.json";

pub fn scenario_slug(s: Scenario) -> &'static str {
    match s {
        Scenario::Historical => "historical",
        Scenario::Ssp245 => "ssp245",
        Scenario::Ssp585 => "ssp585",
    }
}

pub fn forecast_file(s: Scenario) -> String {
    format!("forecast_{}.json", scenario_slug(s))
}

pub fn premium_json_file(s: Scenario) -> String {
    format!("premiums_{}.json", scenario_slug(s))
}

pub fn premium_csv_file(s: Scenario) -> String {
    format!("premiums_{}.csv", scenario_slug(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    Trend,
    FitEgarch,
    FitSarimax,
    Forecast,
    Price,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Trend,
        Stage::FitEgarch,
        Stage::FitSarimax,
        Stage::Forecast,
        Stage::Price,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Trend => "trend",
            Stage::FitEgarch => "fit-egarch",
            Stage::FitSarimax => "fit-sarimax",
            Stage::Forecast => "forecast",
            Stage::Price => "price",
            Stage::Report => "report",
        }
    }

    pub(crate) fn wrap(self, e: Error) -> Error {
        match e {
            Error::Stage { .. } | Error::MissingUpstream { .. } => e,
            other => Error::Stage {
                stage: self.name().into(),
                source: Box::new(other),
            },
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown stage `{s}`")))
    }
}

/// Reads an upstream JSON artifact, naming its producer when it is absent.
pub(crate) fn load_artifact<T: DeserializeOwned>(out: &Path, file: &str, stage: Stage, producer: Stage) -> Result<T> {
    let path = out.join(file);
    if !path.is_file() {
        return Err(Error::MissingUpstream {
            stage: stage.name().into(),
            producer: producer.name().into(),
            path,
        });
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| stage.wrap(Error::Json(e)))
}

pub(crate) fn write_json<T: Serialize>(out: &Path, file: &str, value: &T) -> Result<PathBuf> {
    let path = out.join(file);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Prices, returns and the exogenous paths every later stage works from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestArtifact {
    pub crop: String,
    pub state: String,
    pub boundary_assignment: String,
    /// Last month taken from the historical climate run.
    pub join_end: MonthStamp,
    pub prices: MonthlySeries,
    pub msp: MonthlySeries,
    pub returns: MonthlySeries,
    /// Months with both returns and every exogenous column.
    pub observed: MonthRange,
    /// Months to forecast.
    pub horizon: MonthRange,
    pub alignment: Option<AlignmentReport>,
    /// Regressors per scenario. Over the observed months these are the
    /// same for every scenario.
    pub exog: BTreeMap<Scenario, ExogMatrix>,
    pub climate: Vec<EnsembleMean>,
}

impl IngestArtifact {
    pub fn exog_for(&self, s: Scenario) -> Result<&ExogMatrix> {
        self.exog
            .get(&s)
            .ok_or_else(|| Error::Argument(format!("no exogenous paths were ingested for {s}")))
    }
}

fn splice(head: &MonthlySeries, tail: &MonthlySeries, join_end: MonthStamp, what: &str) -> Result<MonthlySeries> {
    if head.start() > join_end || tail.start() > join_end.succ() || tail.end() <= join_end {
        return Err(Error::Alignment(format!(
            "cannot splice {what}: historical {} and projection {} do not meet at {join_end}",
            head.range(),
            tail.range()
        )));
    }
    let h = head.slice(MonthRange::new(head.start(), join_end)?)?;
    let t = tail.slice(MonthRange::new(join_end.succ(), tail.end())?)?;
    h.concat(&t)
}

fn climate_path(
    cfg: &PipelineConfig,
    panel: &ClimatePanel,
    var: Variable,
    s: Scenario,
    join_end: MonthStamp,
) -> Result<MonthlySeries> {
    let path = match &cfg.exog.model {
        None => panel.scenario_path(var, s, join_end)?,
        Some(model) => {
            let get = |sc: Scenario| {
                panel
                    .member(var, sc, model)
                    .ok_or_else(|| Error::Argument(format!("GCM {model} has no {var} for {sc}")))
            };
            splice(get(Scenario::Historical)?, get(s)?, join_end, var.name())?
        }
    };
    if cfg.exog.anomalies {
        anomalies_with(&path, cfg.exog.baseline, cfg.exog.anomaly_mode)
    } else {
        Ok(path)
    }
}

pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestArtifact> {
    let bundle = load_bundle(
        &cfg.dataset,
        PriceReadOptions {
            average_duplicates: cfg.average_duplicate_prices,
        },
    )?;
    let panel = ClimatePanel::from_records(&bundle.climate)?;
    let join_end = match bundle.manifest.boundary_assignment.as_str() {
        "historical" => historical_join_end().add_months(12),
        _ => historical_join_end(),
    };
    let returns = log_returns(&bundle.prices)?;
    let observed_end = returns.end();

    // Every projection in the panel contributes to the observed-period
    // regressors, whichever scenarios this run forecasts.
    let pool: Vec<Scenario> = Scenario::PROJECTIONS
        .into_iter()
        .filter(|s| cfg.exog.variables.iter().all(|v| panel.mean(*v, *s).is_some()))
        .collect();
    if let Some(s) = cfg.scenarios.iter().find(|s| !pool.contains(s)) {
        return Err(Error::Argument(format!(
            "climate data lacks {s} for some of {:?}",
            cfg.exog.variables.iter().map(|v| v.name()).collect::<Vec<_>>()
        )));
    }

    let mut columns: BTreeMap<Scenario, Vec<(String, MonthlySeries)>> = BTreeMap::new();
    for &var in &cfg.exog.variables {
        let paths: Vec<MonthlySeries> = pool
            .iter()
            .map(|&s| climate_path(cfg, &panel, var, s, join_end))
            .collect::<Result<_>>()?;
        for &s in &cfg.scenarios {
            let own = &paths[pool.iter().position(|p| *p == s).expect("scenario in pool")];
            let values: Vec<f64> = own
                .iter()
                .map(|(m, v)| {
                    if m <= join_end || m > observed_end {
                        return v;
                    }
                    let vals: Vec<f64> = paths.iter().filter_map(|p| p.get(m)).collect();
                    vals.iter().sum::<f64>() / vals.len() as f64
                })
                .collect();
            let series = MonthlySeries::new(own.start(), values, own.unit())?;
            columns.entry(s).or_default().push((var.name().to_string(), series));
        }
    }

    let (observed, alignment) = match columns.get(&cfg.scenarios[0]) {
        Some(cols) => {
            let mut all = vec![returns.clone()];
            all.extend(cols.iter().map(|(_, s)| s.clone()));
            let (_, report) = align_panel(&all)?;
            (report.common, Some(report))
        }
        None => (returns.range(), None),
    };
    if observed.last != observed_end {
        return Err(Error::Alignment(format!(
            "climate paths end before the price sample ({})",
            observed_end
        )));
    }
    if cfg.horizon_end <= observed_end {
        return Err(Error::Config(format!(
            "horizon_end {} is not after the observed sample end {observed_end}",
            cfg.horizon_end
        )));
    }
    let horizon = MonthRange::new(observed_end.succ(), cfg.horizon_end)?;
    for (s, cols) in &columns {
        for (name, series) in cols {
            if series.end() < horizon.last {
                return Err(Error::Alignment(format!(
                    "{name} under {s} ends {} before the horizon end {}",
                    series.end(),
                    horizon.last
                )));
            }
        }
    }
    let exog = columns
        .into_iter()
        .map(|(s, cols)| Ok((s, ExogMatrix::new(cols)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let exog = if exog.is_empty() {
        cfg.scenarios.iter().map(|s| (*s, ExogMatrix::none())).collect()
    } else {
        exog
    };

    let m = &bundle.manifest;
    info!(
        "ingested {} prices, observed {observed}, horizon {horizon}",
        bundle.prices.len()
    );
    Ok(IngestArtifact {
        crop: cfg.crop.clone().unwrap_or_else(|| m.crop.clone()),
        state: cfg.state.clone().unwrap_or_else(|| m.state.clone()),
        boundary_assignment: m.boundary_assignment.clone(),
        join_end,
        prices: bundle.prices,
        msp: bundle.msp,
        returns,
        observed,
        horizon,
        alignment,
        exog,
        climate: panel.means().cloned().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub variable: Variable,
    pub scenario: Scenario,
    pub range: MonthRange,
    pub result: TrendResult,
    pub slope_per_decade: f64,
}

pub fn run_trend(cfg: &PipelineConfig, ing: &IngestArtifact) -> Result<Vec<TrendRow>> {
    ing.climate
        .iter()
        .map(|e| {
            Ok(TrendRow {
                variable: e.variable,
                scenario: e.scenario,
                range: e.series.range(),
                result: mann_kendall(&e.series, cfg.report.trend_alpha)?,
                slope_per_decade: ols_trend(&e.series)?.0 * 120.0,
            })
        })
        .collect()
}

pub fn run_fit_egarch(cfg: &PipelineConfig, ing: &IngestArtifact) -> Result<EgarchFit> {
    let orders = if cfg.egarch.auto {
        select_orders_with(&ing.returns, cfg.egarch.max_order, cfg.execution())?.0
    } else {
        cfg.egarch.orders
    };
    let fit = egarch_fit(&ing.returns, orders)?;
    info!("EGARCH{:?} loglik {:.3}", (orders.p, orders.o, orders.q), fit.loglik);
    Ok(fit)
}

/// Fitted second-stage model with its split of the observed sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SarimaxArtifact {
    pub model: SarimaxModel,
    /// The model was fitted to ln σ.
    pub log_sigma: bool,
    pub training: MonthRange,
    pub validation: MonthRange,
    /// Mean absolute error of the one-step validation predictions against
    /// the EGARCH volatility.
    pub validation_mae: f64,
    /// AIC per candidate when the orders were selected.
    pub selection: Option<Vec<(SarimaxOrders, Option<f64>)>>,
}

/// The dependent series over the observed months.
fn dependent(ing: &IngestArtifact, egarch: &EgarchFit, log_sigma: bool) -> Result<MonthlySeries> {
    let sigma = egarch.sigma.slice(ing.observed)?;
    Ok(if log_sigma { sigma.map(f64::ln) } else { sigma })
}

fn back(v: f64, log_sigma: bool) -> f64 {
    if log_sigma {
        v.exp()
    } else {
        v
    }
}

pub fn run_fit_sarimax(cfg: &PipelineConfig, ing: &IngestArtifact, egarch: &EgarchFit) -> Result<SarimaxArtifact> {
    let log_sigma = cfg.sarimax.log_sigma;
    let y = dependent(ing, egarch, log_sigma)?;
    let exog = ing.exog_for(cfg.scenarios[0])?;
    let n = y.len();
    let n_val = ((n as f64 * cfg.sarimax.validation_fraction).round() as usize).max(1);
    if n_val >= n {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let training = MonthRange::new(y.start(), y.month_at(n - n_val - 1))?;
    let validation = MonthRange::new(y.month_at(n - n_val), y.end())?;
    let y_train = y.slice(training)?;

    let (orders, selection) = if cfg.sarimax.auto {
        let (best, table) = select_sarimax_orders_with(&y_train, exog, &cfg.sarimax.grid, cfg.execution())?;
        (best, Some(table))
    } else {
        (cfg.sarimax.orders, None)
    };
    let model = sarimax_fit(&y_train, exog, orders)?;
    let pred = sarimax_predict(&model, &y, exog)?;
    let sigma = egarch.sigma.slice(validation)?;
    let mae = validation
        .iter()
        .zip(sigma.values())
        .map(|(m, s)| (back(pred.mean.get(m).expect("prediction covers validation"), log_sigma) - s).abs())
        .sum::<f64>()
        / validation.len() as f64;
    info!("SARIMAX{} aic {:.3}, validation MAE {mae:.6}", orders, model.aic);
    Ok(SarimaxArtifact {
        model,
        log_sigma,
        training,
        validation,
        validation_mae: mae,
        selection,
    })
}

/// Per-month predicted volatility for one scenario, from the first
/// predictable observed month to the horizon end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioForecast {
    pub scenario: Scenario,
    pub months: MonthRange,
    pub phase: Vec<Phase>,
    /// EGARCH volatility; `None` in the forecast phase.
    pub egarch_sigma: Vec<Option<f64>>,
    pub predicted: Vec<f64>,
    pub se: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Centered moving average of `predicted`, taken within each phase.
    pub smoothed: Vec<f64>,
    /// `predicted` floored for pricing.
    pub vol: Vec<f64>,
    pub floored: Vec<bool>,
}

/// Smooths each run of equal phase separately so no phase sees another's values.
pub(crate) fn smooth_by_phase(values: &[f64], phases: &[Phase], window: usize, start: MonthStamp) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j < values.len() && phases[j] == phases[i] {
            j += 1;
        }
        let len = j - i;
        let w = window.min(if len % 2 == 1 { len } else { len - 1 });
        let seg = MonthlySeries::new(start.add_months(i as i64), values[i..j].to_vec(), "")?;
        out.extend(smooth(&seg, w)?.into_values());
        i = j;
    }
    Ok(out)
}

pub fn run_forecast(
    cfg: &PipelineConfig,
    ing: &IngestArtifact,
    egarch: &EgarchFit,
    fit: &SarimaxArtifact,
    scenario: Scenario,
) -> Result<ScenarioForecast> {
    let log_sigma = fit.log_sigma;
    let y = dependent(ing, egarch, log_sigma)?;
    let exog = ing.exog_for(scenario)?;
    let inner = sarimax_predict(&fit.model, &y, exog)?;
    let outer = sarimax_forecast_from(&fit.model, &y, exog, exog, ing.horizon.len())?;
    let mean = inner.mean.concat(&outer.mean)?;
    let se = inner.se.concat(&outer.se)?;
    let months = mean.range();

    let phase: Vec<Phase> = months
        .iter()
        .map(|m| {
            if m <= fit.training.last {
                Phase::Historical
            } else if m <= fit.validation.last {
                Phase::Validation
            } else {
                Phase::Forecast
            }
        })
        .collect();
    let k = cfg.sarimax.n_se;
    let predicted: Vec<f64> = mean.values().iter().map(|&v| back(v, log_sigma)).collect();
    let lower: Vec<f64> = mean
        .values()
        .iter()
        .zip(se.values())
        .map(|(m, s)| back(m - k * s, log_sigma))
        .collect();
    let upper: Vec<f64> = mean
        .values()
        .iter()
        .zip(se.values())
        .map(|(m, s)| back(m + k * s, log_sigma))
        .collect();
    if let Some(i) = predicted
        .iter()
        .chain(&lower)
        .chain(&upper)
        .position(|v| !v.is_finite())
    {
        return Err(Error::Numeric(format!(
            "volatility forecast for {scenario} is not finite at {}",
            months.first.add_months((i % months.len()) as i64)
        )));
    }
    let smoothed = smooth_by_phase(&predicted, &phase, cfg.report.smoothing_window, months.first)?;
    let egarch_sigma = months.iter().map(|m| egarch.sigma.get(m)).collect();
    let floored: Vec<bool> = predicted.iter().map(|&v| v < VOL_FLOOR).collect();
    let vol = predicted.iter().map(|&v| v.max(VOL_FLOOR)).collect();
    Ok(ScenarioForecast {
        scenario,
        months,
        phase,
        egarch_sigma,
        predicted,
        se: se.into_values(),
        lower,
        upper,
        smoothed,
        vol,
        floored,
    })
}

/// Monte Carlo reprice of one quote, as a sanity check on the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub month: MonthStamp,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPremiums {
    pub series: PremiumSeries,
    pub floored: Vec<bool>,
    pub smoothed: Vec<f64>,
    pub spot_policy: SpotPolicy,
    pub msp_policy: MspPolicy,
    pub mc_check: Option<McCheck>,
}

/// Observed values where available, the policy's path afterwards.
fn extend_spot(cfg: &PipelineConfig, prices: &MonthlySeries, months: MonthRange) -> Result<MonthlySeries> {
    let last = prices.end();
    let tail = MonthRange::new(last.succ(), months.last)?;
    let future: Vec<f64> = match &cfg.pricing.spot_policy {
        SpotPolicy::HoldLast => vec![*prices.values().last().expect("non-empty"); tail.len()],
        SpotPolicy::LinearTrend => {
            let (slope, icpt) = ols_trend(prices)?;
            let n = prices.len() as f64;
            (0..tail.len()).map(|h| icpt + slope * (n + h as f64)).collect()
        }
        SpotPolicy::Path { file } => {
            let path = read_price_csv(file)?;
            path.slice(tail)
                .map_err(|_| {
                    Error::Alignment(format!(
                        "spot path {} ({}) does not cover {tail}",
                        file.display(),
                        path.range()
                    ))
                })?
                .into_values()
        }
    };
    if let Some(h) = future.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain {
            month: tail.first.add_months(h as i64),
            message: format!("projected spot {} is not positive", future[h]),
        });
    }
    prices
        .concat(&MonthlySeries::new(tail.first, future, prices.unit())?)?
        .slice(months)
}

fn extend_msp(cfg: &PipelineConfig, msp: &MonthlySeries, months: MonthRange) -> Result<MonthlySeries> {
    let last = msp.end();
    let tail = MonthRange::new(last.succ(), months.last)?;
    let base = *msp.values().last().expect("non-empty");
    let future: Vec<f64> = (1..=tail.len())
        .map(|k| match cfg.pricing.msp_policy {
            MspPolicy::HoldLast => base,
            MspPolicy::Growth { annual_rate } => base * (1.0 + annual_rate).powi((k / 12) as i32),
        })
        .collect();
    msp.concat(&MonthlySeries::new(tail.first, future, msp.unit())?)?
        .slice(months)
}

pub fn run_price(cfg: &PipelineConfig, ing: &IngestArtifact, fc: &ScenarioForecast) -> Result<ScenarioPremiums> {
    let spot = extend_spot(cfg, &ing.prices, fc.months)?;
    let msp = extend_msp(cfg, &ing.msp, fc.months)?;
    let vol = MonthlySeries::new(fc.months.first, fc.vol.clone(), "dimensionless")?;
    let p = &cfg.pricing;
    let series = premium_series_with(&spot, &msp, &vol, p.rate, p.maturity, cfg.execution())?
        .with_labels(Some(fc.scenario), fc.phase.clone())?;
    let raw: Vec<f64> = series.quotes.iter().map(|q| q.price).collect();
    let smoothed = smooth_by_phase(&raw, &fc.phase, cfg.report.smoothing_window, fc.months.first)?;
    let mc_check = if p.mc_check_paths > 0 {
        let q = series.quotes.last().expect("non-empty premium series");
        let closed = bs_put(q.inputs)?;
        let mc = monte_carlo_put(q.inputs, p.mc_check_paths, cfg.seed, cfg.execution())?;
        Some(McCheck {
            month: fc.months.last,
            closed_form: closed.price,
            monte_carlo: mc.price,
            std_error: mc.std_error,
            paths: mc.paths,
        })
    } else {
        None
    };
    Ok(ScenarioPremiums {
        series,
        floored: fc.floored.clone(),
        smoothed,
        spot_policy: p.spot_policy.clone(),
        msp_policy: p.msp_policy.clone(),
        mc_check,
    })
}
