//! Config-driven orchestration: ingest, trend tests, EGARCH, SARIMAX per
//! scenario, forecasting, pricing and the plot-ready report.
//!
//! Every stage writes a JSON artifact into the output directory, so each
//! can also be run on its own from the artifacts of the stages before it.

mod config;
mod report;
mod stages;
mod synthetic;

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::egarch::{EgarchFit, EgarchOrders, EgarchParams};
use crate::error::{Error, Result};
use crate::ingest::Scenario;
use crate::par;
use crate::sarimax::SarimaxOrders;

pub use config::{
    EgarchConfig, ExogConfig, MspPolicy, PipelineConfig, PricingConfig, ReportConfig, SarimaxConfig, SpotPolicy,
    CONFIG_VERSION,
};
pub use report::{
    build_manifest, fig4_file, FileEntry, Manifest, FIG1_FILE, FIG2_FILE, FIG3_FILE, FIG4_COLUMNS, FIG5_COLUMNS,
    FIG5_FILE, MANIFEST_FILE, PREMIUM_COLUMNS, RUN_REPORT_FILE,
};
pub use stages::{
    forecast_file, premium_csv_file, premium_json_file, run_fit_egarch, run_fit_sarimax, run_forecast, run_ingest,
    run_price, run_trend, scenario_slug, IngestArtifact, McCheck, SarimaxArtifact, ScenarioForecast, ScenarioPremiums,
    Stage, TrendRow, EGARCH_FILE, INGEST_FILE, SARIMAX_FILE, TREND_FILE,
};
pub use synthetic::{write_synthetic_bundle, SyntheticOptions};

use stages::{load_artifact, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogCoefficient {
    pub name: String,
    pub gamma: f64,
    pub gamma_standardized: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub egarch_orders: EgarchOrders,
    pub egarch_params: EgarchParams,
    pub egarch_loglik: f64,
    pub egarch_aic: f64,
    pub sarimax_orders: SarimaxOrders,
    pub sarimax_loglik: f64,
    pub sarimax_aic: f64,
    pub sarimax_converged: bool,
    pub exog: Vec<ExogCoefficient>,
    pub log_sigma: bool,
    pub validation_mae: f64,
    /// Months whose volatility hit the pricing floor, per scenario.
    pub floored_months: Vec<(Scenario, usize)>,
}

impl ModelSummary {
    fn new(egarch: &EgarchFit, fit: &SarimaxArtifact, premiums: &[ScenarioPremiums]) -> Self {
        let m = &fit.model;
        Self {
            egarch_orders: egarch.orders,
            egarch_params: egarch.params.clone(),
            egarch_loglik: egarch.loglik,
            egarch_aic: egarch.aic,
            sarimax_orders: m.orders,
            sarimax_loglik: m.loglik,
            sarimax_aic: m.aic,
            sarimax_converged: m.converged,
            exog: m
                .exog
                .names()
                .iter()
                .enumerate()
                .map(|(j, n)| ExogCoefficient {
                    name: n.to_string(),
                    gamma: m.params.gamma[j],
                    gamma_standardized: m.gamma_standardized[j],
                    std_error: m.std_errors.gamma.get(j).copied().flatten(),
                })
                .collect(),
            log_sigma: fit.log_sigma,
            validation_mae: fit.validation_mae,
            floored_months: premiums
                .iter()
                .filter_map(|p| p.series.scenario.map(|s| (s, p.floored.iter().filter(|f| **f).count())))
                .collect(),
        }
    }
}

/// Outcome of a run. Timings live here and not in the manifest, which
/// therefore only depends on the config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_version: u32,
    pub crop: Option<String>,
    pub state: Option<String>,
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
    pub complete: bool,
    pub stages: Vec<StageRecord>,
    pub summary: Option<ModelSummary>,
    pub manifest: Manifest,
}

/// Every file the pipeline may emit for `cfg`, excluding the manifest and
/// the run report.
pub fn artifact_files(cfg: &PipelineConfig) -> Vec<String> {
    let mut files: Vec<String> = [
        INGEST_FILE,
        TREND_FILE,
        EGARCH_FILE,
        SARIMAX_FILE,
        FIG1_FILE,
        FIG2_FILE,
        FIG3_FILE,
        FIG5_FILE,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for &s in &cfg.scenarios {
        files.push(forecast_file(s));
        files.push(premium_json_file(s));
        files.push(premium_csv_file(s));
        files.push(fig4_file(s));
    }
    files
}

struct Recorder<'a> {
    cfg: &'a PipelineConfig,
    stages: Vec<StageRecord>,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a PipelineConfig) -> Self {
        Self {
            cfg,
            stages: Vec::new(),
        }
    }

    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f().map_err(|e| stage.wrap(e));
        self.stages.push(StageRecord {
            stage,
            status: if out.is_ok() {
                StageStatus::Ok
            } else {
                StageStatus::Failed
            },
            seconds: t0.elapsed().as_secs_f64(),
            error: out.as_ref().err().map(|e| e.to_string()),
        });
        if let Err(e) = &out {
            warn!("{e}");
            if let Err(e2) = self.finish(None, None, false) {
                warn!("could not record the failed run: {e2}");
            }
        }
        out
    }

    /// Writes the manifest and the run report.
    fn finish(&self, ing: Option<&IngestArtifact>, summary: Option<ModelSummary>, complete: bool) -> Result<RunReport> {
        let out = &self.cfg.output_dir;
        let manifest = build_manifest(out, &artifact_files(self.cfg), complete)?;
        write_json(out, MANIFEST_FILE, &manifest)?;
        let report = RunReport {
            config_version: self.cfg.config_version,
            crop: ing.map(|i| i.crop.clone()),
            state: ing.map(|i| i.state.clone()),
            seed: self.cfg.seed,
            scenarios: self.cfg.scenarios.clone(),
            complete,
            stages: self.stages.clone(),
            summary,
            manifest,
        };
        write_json(out, RUN_REPORT_FILE, &report)?;
        Ok(report)
    }
}

fn prepare_output(cfg: &PipelineConfig) -> Result<()> {
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Runs every stage in order and writes all artifacts into the output
/// directory. A failing stage aborts the run; the manifest written at that
/// point is marked incomplete.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.preflight()?;
    prepare_output(cfg)?;
    let out = cfg.output_dir.as_path();
    // Leftovers from an earlier run must not be mistaken for this run's output.
    for file in artifact_files(cfg)
        .iter()
        .map(String::as_str)
        .chain([MANIFEST_FILE, RUN_REPORT_FILE])
    {
        let path = out.join(file);
        if path.is_file() {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    let mut rec = Recorder::new(cfg);

    let ing = rec.run(Stage::Ingest, || {
        let ing = run_ingest(cfg)?;
        write_json(out, INGEST_FILE, &ing)?;
        Ok(ing)
    })?;
    rec.run(Stage::Trend, || report::write_trend(out, &run_trend(cfg, &ing)?))?;
    let egarch = rec.run(Stage::FitEgarch, || {
        let fit = run_fit_egarch(cfg, &ing)?;
        write_json(out, EGARCH_FILE, &fit)?;
        Ok(fit)
    })?;
    let fit = rec.run(Stage::FitSarimax, || {
        let fit = run_fit_sarimax(cfg, &ing, &egarch)?;
        write_json(out, SARIMAX_FILE, &fit)?;
        Ok(fit)
    })?;
    let forecasts = rec.run(Stage::Forecast, || forecast_all(cfg, &ing, &egarch, &fit))?;
    let premiums = rec.run(Stage::Price, || price_all(cfg, &ing, &forecasts))?;
    rec.run(Stage::Report, || {
        report::write_figures(cfg, out, &ing, &egarch, &forecasts, &premiums)
    })?;
    let summary = ModelSummary::new(&egarch, &fit, &premiums);
    rec.finish(Some(&ing), Some(summary), true)
}

fn forecast_all(
    cfg: &PipelineConfig,
    ing: &IngestArtifact,
    egarch: &EgarchFit,
    fit: &SarimaxArtifact,
) -> Result<Vec<ScenarioForecast>> {
    let forecasts = par::map_slice(cfg.execution(), &cfg.scenarios, |&s| {
        run_forecast(cfg, ing, egarch, fit, s)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for f in &forecasts {
        write_json(&cfg.output_dir, &forecast_file(f.scenario), f)?;
    }
    Ok(forecasts)
}

fn price_all(
    cfg: &PipelineConfig,
    ing: &IngestArtifact,
    forecasts: &[ScenarioForecast],
) -> Result<Vec<ScenarioPremiums>> {
    let premiums = par::map_slice(cfg.execution(), forecasts, |f| run_price(cfg, ing, f))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    for (f, p) in forecasts.iter().zip(&premiums) {
        write_json(&cfg.output_dir, &premium_json_file(f.scenario), p)?;
        report::write_premium_csv(&cfg.output_dir, p)?;
    }
    Ok(premiums)
}

/// Runs one stage from the artifacts already in the output directory.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    cfg.preflight()?;
    prepare_output(cfg)?;
    let out = cfg.output_dir.as_path();
    let ingest = || load_artifact::<IngestArtifact>(out, INGEST_FILE, stage, Stage::Ingest);
    let egarch = || load_artifact::<EgarchFit>(out, EGARCH_FILE, stage, Stage::FitEgarch);
    let sarimax = || load_artifact::<SarimaxArtifact>(out, SARIMAX_FILE, stage, Stage::FitSarimax);
    let forecasts = || -> Result<Vec<ScenarioForecast>> {
        cfg.scenarios
            .iter()
            .map(|&s| load_artifact(out, &forecast_file(s), stage, Stage::Forecast))
            .collect()
    };
    let premiums = || -> Result<Vec<ScenarioPremiums>> {
        cfg.scenarios
            .iter()
            .map(|&s| load_artifact(out, &premium_json_file(s), stage, Stage::Price))
            .collect()
    };
    let body = || -> Result<()> {
        match stage {
            Stage::Ingest => {
                write_json(out, INGEST_FILE, &run_ingest(cfg)?)?;
            }
            Stage::Trend => report::write_trend(out, &run_trend(cfg, &ingest()?)?)?,
            Stage::FitEgarch => {
                write_json(out, EGARCH_FILE, &run_fit_egarch(cfg, &ingest()?)?)?;
            }
            Stage::FitSarimax => {
                let (i, e) = (ingest()?, egarch()?);
                write_json(out, SARIMAX_FILE, &run_fit_sarimax(cfg, &i, &e)?)?;
            }
            Stage::Forecast => {
                let (i, e, s) = (ingest()?, egarch()?, sarimax()?);
                forecast_all(cfg, &i, &e, &s)?;
            }
            Stage::Price => {
                let (i, f) = (ingest()?, forecasts()?);
                price_all(cfg, &i, &f)?;
            }
            Stage::Report => {
                let (f, p) = (forecasts()?, premiums()?);
                let (i, e, s) = (ingest()?, egarch()?, sarimax()?);
                report::write_figures(cfg, out, &i, &e, &f, &p)?;
                let mut rec = Recorder::new(cfg);
                rec.stages.push(StageRecord {
                    stage,
                    status: StageStatus::Ok,
                    seconds: 0.0,
                    error: None,
                });
                rec.finish(Some(&i), Some(ModelSummary::new(&e, &s, &p)), true)?;
            }
        }
        Ok(())
    };
    body().map_err(|e| stage.wrap(e))
}
