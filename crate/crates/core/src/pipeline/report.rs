use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use super::stages::{premium_csv_file, scenario_slug, IngestArtifact, ScenarioForecast, ScenarioPremiums, TrendRow};
use crate::egarch::EgarchFit;
use crate::error::{Error, Result};
use crate::ingest::Variable;
use crate::series::{band, BandSeries, BandSpec, MonthStamp, WidthRule, WindowAlignment};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUN_REPORT_FILE: &str = "run_report.json";

pub const FIG1_FILE: &str = "fig1_price_bands.csv";
pub const FIG2_FILE: &str = "fig2_climate_bands.csv";
pub const FIG3_FILE: &str = "fig3_returns_volatility.csv";
pub const FIG5_FILE: &str = "fig5_premiums.csv";

pub const FIG4_COLUMNS: [&str; 8] = [
    "month",
    "phase",
    "egarch_sigma",
    "predicted",
    "lower68",
    "upper68",
    "smoothed",
    "vol_floored",
];

pub const PREMIUM_COLUMNS: [&str; 13] = [
    "month",
    "scenario",
    "phase",
    "spot",
    "msp",
    "vol_monthly",
    "vol_annual",
    "rate",
    "maturity",
    "premium",
    "d1",
    "d2",
    "vol_floored",
];

pub const FIG5_COLUMNS: [&str; 5] = ["month", "scenario", "phase", "premium", "premium_smoothed"];

pub fn fig4_file(s: crate::ingest::Scenario) -> String {
    format!("fig4_sarimax_forecast_{}.csv", scenario_slug(s))
}

/// Formats a finite number; anything else is a bug upstream.
fn num(x: f64, what: &str) -> Result<String> {
    if x.is_finite() {
        Ok(x.to_string())
    } else {
        Err(Error::Numeric(format!("non-finite value in {what}")))
    }
}

fn opt_num(x: Option<f64>, what: &str) -> Result<String> {
    x.map_or(Ok(String::new()), |v| num(v, what))
}

struct Table {
    path: std::path::PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    fn create(dir: &Path, file: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(file);
        let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(f);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, cells: &[String]) -> Result<()> {
        Ok(self.writer.write_record(cells)?)
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn band_cells(b: &BandSeries, m: MonthStamp, what: &str) -> Result<[String; 3]> {
    Ok([
        opt_num(b.center.get(m), what)?,
        opt_num(b.lower.get(m), what)?,
        opt_num(b.upper.get(m), what)?,
    ])
}

pub fn write_trend(dir: &Path, rows: &[TrendRow]) -> Result<()> {
    let mut t = Table::create(
        dir,
        super::stages::TREND_FILE,
        &[
            "variable",
            "scenario",
            "first",
            "last",
            "n",
            "s_statistic",
            "variance_s",
            "z_score",
            "p_value",
            "direction",
            "slope_per_decade",
        ],
    )?;
    for r in rows {
        let dir = serde_json::to_value(r.result.direction)?;
        t.row(&[
            r.variable.to_string(),
            r.scenario.to_string(),
            r.range.first.to_string(),
            r.range.last.to_string(),
            r.range.len().to_string(),
            r.result.s_statistic.to_string(),
            num(r.result.variance_s, "trend")?,
            num(r.result.z_score, "trend")?,
            num(r.result.p_value, "trend")?,
            dir.as_str().unwrap_or_default().to_string(),
            num(r.slope_per_decade, "trend")?,
        ])?;
    }
    t.finish()
}

pub fn write_premium_csv(dir: &Path, p: &ScenarioPremiums) -> Result<()> {
    let scenario = p.series.scenario.map(|s| s.to_string()).unwrap_or_default();
    let file = premium_csv_file(p.series.scenario.unwrap_or(crate::ingest::Scenario::Historical));
    let mut t = Table::create(dir, &file, &PREMIUM_COLUMNS)?;
    for (i, q) in p.series.quotes.iter().enumerate() {
        let inp = &q.inputs;
        t.row(&[
            p.series.month_at(i).to_string(),
            scenario.clone(),
            p.series.phases[i].to_string(),
            num(inp.spot, "spot")?,
            num(inp.strike, "msp")?,
            num(inp.vol / 12f64.sqrt(), "vol_monthly")?,
            num(inp.vol, "vol_annual")?,
            num(inp.rate, "rate")?,
            num(inp.maturity, "maturity")?,
            num(q.price, "premium")?,
            num(q.d1, "d1")?,
            num(q.d2, "d2")?,
            u8::from(p.floored[i]).to_string(),
        ])?;
    }
    t.finish()
}

/// Writes the figure tables.
pub fn write_figures(
    cfg: &PipelineConfig,
    dir: &Path,
    ing: &IngestArtifact,
    egarch: &EgarchFit,
    forecasts: &[ScenarioForecast],
    premiums: &[ScenarioPremiums],
) -> Result<()> {
    let r = &cfg.report;

    let pb = band(
        &ing.prices,
        BandSpec {
            window: r.price_band_window,
            rule: WidthRule::KSigma,
            k: r.price_band_k,
            alignment: WindowAlignment::Trailing,
        },
    )?;
    let mut t = Table::create(dir, FIG1_FILE, &["month", "price", "center", "lower", "upper"])?;
    for (m, v) in ing.prices.iter() {
        let [c, lo, hi] = band_cells(&pb, m, "price band")?;
        t.row(&[m.to_string(), num(v, "price")?, c, lo, hi])?;
    }
    t.finish()?;

    let mut t = Table::create(
        dir,
        FIG2_FILE,
        &["variable", "scenario", "month", "value", "center", "lower", "upper"],
    )?;
    for e in &ing.climate {
        let spec = BandSpec {
            window: r.climate_band_window,
            rule: if e.variable == Variable::Pr {
                WidthRule::LogSigmaFactor
            } else {
                WidthRule::KSigma
            },
            k: 1.0,
            alignment: WindowAlignment::Centered,
        };
        let b = band(&e.series, spec)?;
        for (m, v) in e.series.iter() {
            let [c, lo, hi] = band_cells(&b, m, "climate band")?;
            t.row(&[
                e.variable.to_string(),
                e.scenario.to_string(),
                m.to_string(),
                num(v, "climate")?,
                c,
                lo,
                hi,
            ])?;
        }
    }
    t.finish()?;

    let mut t = Table::create(dir, FIG3_FILE, &["month", "price", "log_return", "egarch_sigma"])?;
    for (m, v) in ing.prices.iter() {
        t.row(&[
            m.to_string(),
            num(v, "price")?,
            opt_num(ing.returns.get(m), "returns")?,
            opt_num(egarch.sigma.get(m), "egarch sigma")?,
        ])?;
    }
    t.finish()?;

    for f in forecasts {
        let mut t = Table::create(dir, &fig4_file(f.scenario), &FIG4_COLUMNS)?;
        for (i, m) in f.months.iter().enumerate() {
            t.row(&[
                m.to_string(),
                f.phase[i].to_string(),
                opt_num(f.egarch_sigma[i], "egarch sigma")?,
                num(f.predicted[i], "predicted")?,
                num(f.lower[i], "lower68")?,
                num(f.upper[i], "upper68")?,
                num(f.smoothed[i], "smoothed")?,
                u8::from(f.floored[i]).to_string(),
            ])?;
        }
        t.finish()?;
    }

    let mut t = Table::create(dir, FIG5_FILE, &FIG5_COLUMNS)?;
    let len = premiums.iter().map(|p| p.series.quotes.len()).max().unwrap_or(0);
    for i in 0..len {
        for p in premiums {
            if i >= p.series.quotes.len() {
                continue;
            }
            t.row(&[
                p.series.month_at(i).to_string(),
                p.series.scenario.map(|s| s.to_string()).unwrap_or_default(),
                p.series.phases[i].to_string(),
                num(p.series.quotes[i].price, "premium")?,
                num(p.smoothed[i], "smoothed premium")?,
            ])?;
        }
    }
    t.finish()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Content hashes of the emitted files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// False when a stage failed and the listed files are partial.
    pub complete: bool,
    pub files: Vec<FileEntry>,
}

/// Hashes whichever of `files` exist in `dir`, in name order.
pub fn build_manifest(dir: &Path, files: &[String], complete: bool) -> Result<Manifest> {
    let mut names: Vec<&String> = files.iter().collect();
    names.sort();
    names.dedup();
    let mut entries = Vec::new();
    for name in names {
        let path = dir.join(name);
        if !path.is_file() {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        entries.push(FileEntry {
            file: name.clone(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
    }
    Ok(Manifest {
        complete,
        files: entries,
    })
}
