use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::egarch::EgarchOrders;
use crate::error::{Error, Result};
use crate::ingest::{read_manifest, AnomalyMode, Scenario, Variable};
use crate::par::Execution;
use crate::pricing::{DEFAULT_MATURITY, DEFAULT_RATE};
use crate::sarimax::{OrderGrid, SarimaxOrders};
use crate::series::{MonthRange, MonthStamp};

pub const CONFIG_VERSION: u32 = 1;

/// Pipeline configuration, read from JSON. Relative paths are resolved
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub config_version: u32,
    /// Dataset bundle directory (prices.csv, msp.csv, climate.csv, manifest.json).
    pub dataset: PathBuf,
    /// Overrides the bundle manifest's labels when set.
    #[serde(default)]
    pub crop: Option<String>,
    #[serde(default)]
    pub state: Option<String>,
    #[serde(default)]
    pub average_duplicate_prices: bool,
    #[serde(default)]
    pub egarch: EgarchConfig,
    #[serde(default)]
    pub sarimax: SarimaxConfig,
    #[serde(default)]
    pub exog: ExogConfig,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "default_horizon_end")]
    pub horizon_end: MonthStamp,
    #[serde(default)]
    pub pricing: PricingConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgarchConfig {
    #[serde(default)]
    pub orders: EgarchOrders,
    /// Select orders by AIC over `1..=max_order` instead.
    #[serde(default)]
    pub auto: bool,
    #[serde(default = "default_egarch_max")]
    pub max_order: usize,
}

impl Default for EgarchConfig {
    fn default() -> Self {
        Self {
            orders: EgarchOrders::default(),
            auto: false,
            max_order: default_egarch_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarimaxConfig {
    #[serde(default)]
    pub orders: SarimaxOrders,
    #[serde(default)]
    pub auto: bool,
    #[serde(default)]
    pub grid: OrderGrid,
    /// Model ln σ instead of σ; forecasts and bands are exponentiated.
    #[serde(default)]
    pub log_sigma: bool,
    /// Trailing share of the observed sample held out for validation.
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
    /// Half-width of the prediction band in standard errors.
    #[serde(default = "default_n_se")]
    pub n_se: f64,
}

impl Default for SarimaxConfig {
    fn default() -> Self {
        Self {
            orders: SarimaxOrders::default(),
            auto: false,
            grid: OrderGrid::default(),
            log_sigma: false,
            validation_fraction: default_validation(),
            n_se: default_n_se(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogConfig {
    #[serde(default = "default_variables")]
    pub variables: Vec<Variable>,
    /// Use anomalies against `baseline` instead of raw values.
    #[serde(default)]
    pub anomalies: bool,
    #[serde(default)]
    pub anomaly_mode: AnomalyMode,
    #[serde(default = "default_baseline")]
    pub baseline: MonthRange,
    /// Use one GCM instead of the ensemble mean.
    #[serde(default)]
    pub model: Option<String>,
}

impl Default for ExogConfig {
    fn default() -> Self {
        Self {
            variables: default_variables(),
            anomalies: false,
            anomaly_mode: AnomalyMode::default(),
            baseline: default_baseline(),
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpotPolicy {
    HoldLast,
    /// OLS line through the observed prices, extended forward.
    LinearTrend,
    /// `month,price` CSV covering every forecast month.
    Path {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MspPolicy {
    HoldLast,
    /// Compounded once every 12 months after the last observed month.
    Growth {
        annual_rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_maturity")]
    pub maturity: f64,
    #[serde(default = "default_spot")]
    pub spot_policy: SpotPolicy,
    #[serde(default = "default_msp")]
    pub msp_policy: MspPolicy,
    /// Monte Carlo paths for the spot check of the last forecast quote; 0 disables it.
    #[serde(default)]
    pub mc_check_paths: usize,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            rate: default_rate(),
            maturity: default_maturity(),
            spot_policy: default_spot(),
            msp_policy: default_msp(),
            mc_check_paths: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Centered smoothing window for the smoothed columns (odd).
    #[serde(default = "default_smoothing")]
    pub smoothing_window: usize,
    #[serde(default = "default_price_window")]
    pub price_band_window: usize,
    #[serde(default = "default_price_k")]
    pub price_band_k: f64,
    #[serde(default = "default_climate_window")]
    pub climate_band_window: usize,
    #[serde(default = "default_alpha")]
    pub trend_alpha: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            smoothing_window: default_smoothing(),
            price_band_window: default_price_window(),
            price_band_k: default_price_k(),
            climate_band_window: default_climate_window(),
            trend_alpha: default_alpha(),
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_scenarios() -> Vec<Scenario> {
    Scenario::PROJECTIONS.to_vec()
}
fn default_horizon_end() -> MonthStamp {
    MonthStamp::new(2100, 12).expect("valid month")
}
fn default_output_dir() -> PathBuf {
    "out".into()
}
fn default_egarch_max() -> usize {
    2
}
fn default_validation() -> f64 {
    0.2
}
fn default_n_se() -> f64 {
    1.0
}
fn default_variables() -> Vec<Variable> {
    vec![Variable::Tasmax, Variable::Pr]
}
fn default_baseline() -> MonthRange {
    let m = |y, mo| MonthStamp::new(y, mo).expect("valid month");
    MonthRange::new(m(1970, 1), m(2014, 12)).expect("ordered range")
}
fn default_rate() -> f64 {
    DEFAULT_RATE
}
fn default_maturity() -> f64 {
    DEFAULT_MATURITY
}
fn default_spot() -> SpotPolicy {
    SpotPolicy::HoldLast
}
fn default_msp() -> MspPolicy {
    MspPolicy::HoldLast
}
fn default_smoothing() -> usize {
    13
}
fn default_price_window() -> usize {
    20
}
fn default_price_k() -> f64 {
    2.0
}
fn default_climate_window() -> usize {
    12
}
fn default_alpha() -> f64 {
    0.05
}

impl PipelineConfig {
    /// Config with every default, pointing at `dataset`.
    pub fn for_dataset(dataset: impl Into<PathBuf>) -> Self {
        serde_json::from_value(serde_json::json!({
            "config_version": CONFIG_VERSION,
            "dataset": dataset.into(),
        }))
        .expect("defaults deserialize")
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.output_dir);
        if let SpotPolicy::Path { file } = &mut self.pricing.spot_policy {
            fix(file);
        }
    }

    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    /// Checks everything that can be checked before touching the data.
    pub fn preflight(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.config_version != CONFIG_VERSION {
            return cfg_err(format!(
                "config_version {} is not supported (expected {CONFIG_VERSION})",
                self.config_version
            ));
        }
        if !self.dataset.is_dir() {
            return cfg_err(format!("dataset directory {} does not exist", self.dataset.display()));
        }
        let manifest = read_manifest(&self.dataset).map_err(|e| Error::Config(e.to_string()))?;
        for file in [&manifest.prices, &manifest.msp, &manifest.climate] {
            let p = self.dataset.join(file);
            if !p.is_file() {
                return cfg_err(format!("dataset file {} does not exist", p.display()));
            }
        }
        if !matches!(manifest.boundary_assignment.as_str(), "scenario" | "historical") {
            return cfg_err(format!(
                "boundary_assignment `{}` must be `scenario` or `historical`",
                manifest.boundary_assignment
            ));
        }
        if self.scenarios.is_empty() {
            return cfg_err("at least one scenario is required".into());
        }
        let unique: BTreeSet<_> = self.scenarios.iter().collect();
        if unique.len() != self.scenarios.len() {
            return cfg_err("scenarios must not repeat".into());
        }
        if let Some(s) = self.scenarios.iter().find(|s| !s.is_projection()) {
            return cfg_err(format!("scenario {s} is not a projection"));
        }
        let unique: BTreeSet<_> = self.exog.variables.iter().collect();
        if unique.len() != self.exog.variables.len() {
            return cfg_err("exogenous variables must not repeat".into());
        }
        if self.exog.anomalies && self.exog.baseline.len() < 12 {
            return cfg_err("anomaly baseline must cover at least 12 months".into());
        }
        let f = self.sarimax.validation_fraction;
        if !(f > 0.0 && f <= 0.5) {
            return cfg_err(format!("validation_fraction {f} must lie in (0, 0.5]"));
        }
        if !(self.sarimax.n_se > 0.0 && self.sarimax.n_se.is_finite()) {
            return cfg_err(format!("n_se {} must be positive", self.sarimax.n_se));
        }
        self.sarimax
            .orders
            .validate()
            .map_err(|e| Error::Config(format!("sarimax orders: {e}")))?;
        if self.sarimax.auto {
            self.sarimax
                .grid
                .validate()
                .map_err(|e| Error::Config(format!("sarimax grid: {e}")))?;
        }
        EgarchOrders::new(self.egarch.orders.p, self.egarch.orders.o, self.egarch.orders.q)
            .map_err(|e| Error::Config(format!("egarch orders: {e}")))?;
        if self.egarch.auto && !(1..=3).contains(&self.egarch.max_order) {
            return cfg_err(format!("egarch max_order {} must lie in 1..=3", self.egarch.max_order));
        }
        let p = &self.pricing;
        if !p.rate.is_finite() {
            return cfg_err("pricing rate must be finite".into());
        }
        if !(p.maturity > 0.0 && p.maturity.is_finite()) {
            return cfg_err(format!("maturity {} must be positive", p.maturity));
        }
        match &p.spot_policy {
            SpotPolicy::Path { file } if !file.is_file() => {
                return cfg_err(format!("spot path file {} does not exist", file.display()))
            }
            _ => {}
        }
        if let MspPolicy::Growth { annual_rate } = p.msp_policy {
            if !(annual_rate > -1.0 && annual_rate.is_finite()) {
                return cfg_err(format!("MSP growth rate {annual_rate} must exceed -1"));
            }
        }
        let r = &self.report;
        if r.smoothing_window == 0 || r.smoothing_window % 2 == 0 {
            return cfg_err(format!("smoothing_window {} must be odd", r.smoothing_window));
        }
        if r.price_band_window < 2 || r.climate_band_window < 2 {
            return cfg_err("band windows must be at least 2".into());
        }
        if !(r.price_band_k > 0.0) {
            return cfg_err("price_band_k must be positive".into());
        }
        if !(r.trend_alpha > 0.0 && r.trend_alpha < 1.0) {
            return cfg_err("trend_alpha must lie in (0, 1)".into());
        }
        Ok(())
    }
}
