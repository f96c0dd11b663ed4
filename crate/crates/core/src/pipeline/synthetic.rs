//! A self-contained dataset bundle with a known climate-volatility link.
//!
//! Price volatility rises with the ensemble-mean maximum temperature. The
//! two projections share every value up to `divergence`; after it the
//! high-emission run warms faster. Precipitation is identical across runs.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{BundleManifest, Scenario, DEFAULT_GCMS};
use crate::series::{MonthRange, MonthStamp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOptions {
    pub seed: u64,
    /// First month in which the two projections differ.
    pub divergence: MonthStamp,
    /// Extra warming of SSP5-8.5 over SSP2-4.5, degC per decade after `divergence`.
    pub extra_warming: f64,
    /// d ln σ / d tasmax anomaly of the price process.
    pub vol_sensitivity: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            seed: 20240101,
            divergence: MonthStamp::new(2030, 1).expect("valid month"),
            extra_warming: 0.4,
            vol_sensitivity: 0.5,
        }
    }
}

const GCM_OFFSET: [f64; 4] = [-0.6, 0.2, 0.5, -0.1];
const GCM_RAIN: [f64; 4] = [0.9, 1.05, 1.1, 0.95];

fn m(y: i32, mo: u32) -> MonthStamp {
    MonthStamp::new(y, mo).expect("valid month")
}

fn years_since(month: MonthStamp, origin: MonthStamp) -> f64 {
    origin.months_until(month) as f64 / 12.0
}

fn tasmax_clim(month: MonthStamp) -> f64 {
    31.5 + 5.5 * (2.0 * PI * (month.month() as f64 - 2.0) / 12.0).sin()
}

fn pr_clim(month: MonthStamp) -> f64 {
    let x = (month.month() as f64 - 7.5) / 1.3;
    15.0 + 260.0 * (-0.5 * x * x).exp()
}

struct Member {
    tasmax: Vec<f64>,
    pr: Vec<f64>,
}

/// Slow regional temperature swing shared by every GCM and scenario.
fn regional_swing(calendar: MonthRange) -> Vec<f64> {
    (0..calendar.len())
        .map(|t| 1.2 * (2.0 * PI * t as f64 / 84.0).sin())
        .collect()
}

/// tasmax (SSP2-4.5 warming) and pr for one GCM over the full calendar.
fn member(opts: &SyntheticOptions, g: usize, calendar: MonthRange, swing: &[f64]) -> Member {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(g as u64 + 1);
    let proj_start = m(2015, 1);
    let (mut tasmax, mut pr) = (Vec::new(), Vec::new());
    for (i, month) in calendar.iter().enumerate() {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let warming = 0.015 * years_since(month, m(1970, 1)) + 0.01 * years_since(month, proj_start).max(0.0);
        tasmax.push(tasmax_clim(month) + GCM_OFFSET[g] + warming + swing[i] + 0.15 * z1);
        pr.push(pr_clim(month) * GCM_RAIN[g] * (0.35 * z2 - 0.06).exp());
    }
    Member { tasmax, pr }
}

fn extra(opts: &SyntheticOptions, month: MonthStamp) -> f64 {
    if month < opts.divergence {
        0.0
    } else {
        opts.extra_warming / 10.0 * (years_since(month, opts.divergence) + 1.0 / 12.0)
    }
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes prices.csv, msp.csv, climate.csv and manifest.json into `dir`.
pub fn write_synthetic_bundle(dir: impl AsRef<Path>, opts: SyntheticOptions) -> Result<BundleManifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hist = Scenario::Historical.period();
    let proj = Scenario::Ssp245.period();
    let calendar = MonthRange::new(hist.first, proj.last)?;
    let swing = regional_swing(calendar);
    let members: Vec<Member> = (0..DEFAULT_GCMS.len())
        .map(|g| member(&opts, g, calendar, &swing))
        .collect();
    let idx = |month: MonthStamp| hist.first.months_until(month) as usize;

    let mut climate = Vec::new();
    for (g, name) in DEFAULT_GCMS.iter().enumerate() {
        for (scenario, range) in [
            (Scenario::Historical, hist),
            (Scenario::Ssp245, proj),
            (Scenario::Ssp585, proj),
        ] {
            for month in range.iter() {
                let i = idx(month);
                let bump = if scenario == Scenario::Ssp585 {
                    extra(&opts, month)
                } else {
                    0.0
                };
                let t = members[g].tasmax[i] + bump;
                climate.push(vec![
                    month.to_string(),
                    "tasmax".into(),
                    scenario.to_string(),
                    name.to_string(),
                    format!("{t:.4}"),
                ]);
                let p = members[g].pr[i];
                climate.push(vec![
                    month.to_string(),
                    "pr".into(),
                    scenario.to_string(),
                    name.to_string(),
                    format!("{p:.4}"),
                ]);
            }
        }
    }
    write_rows(
        &dir.join("climate.csv"),
        &["month", "variable", "scenario", "model", "value"],
        climate,
    )?;

    // Price volatility follows the ensemble-mean tasmax with some persistence.
    let prices_range = MonthRange::new(m(2001, 10), m(2024, 12))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut price = 900.0;
    let mut log_sigma = (0.035f64).ln();
    let mut prices = Vec::new();
    for (t, month) in prices_range.iter().enumerate() {
        if t > 0 {
            let i = idx(month);
            let tbar = members.iter().map(|mb| mb.tasmax[i]).sum::<f64>() / members.len() as f64;
            let target = (0.035f64).ln() + opts.vol_sensitivity * (tbar - tasmax_clim(month));
            let eta: f64 = StandardNormal.sample(&mut rng);
            log_sigma = 0.6 * log_sigma + 0.4 * target + 0.1 * eta;
            let z: f64 = StandardNormal.sample(&mut rng);
            price *= (0.003 + log_sigma.exp() * z).exp();
        }
        prices.push(vec![month.to_string(), format!("{price:.2}")]);
    }
    write_rows(&dir.join("prices.csv"), &["month", "price"], prices)?;

    // Revised every October; the first record sits at the price start.
    let msp = (2001..=2024).map(|y| {
        let k = y - 2001;
        vec![m(y, 10).to_string(), format!("{:.2}", 780.0 * 1.045f64.powi(k))]
    });
    write_rows(&dir.join("msp.csv"), &["effective_month", "msp"], msp)?;

    let label = format!("synthetic (seed {})", opts.seed);
    let manifest = BundleManifest {
        crop: "synthetic-crop".into(),
        state: "synthetic-state".into(),
        units: BTreeMap::from([
            ("price".to_string(), "INR-per-quintal".to_string()),
            ("msp".to_string(), "INR-per-quintal".to_string()),
            ("tasmax".to_string(), "degC".to_string()),
            ("pr".to_string(), "mm-per-month".to_string()),
        ]),
        provenance: BTreeMap::from([
            ("prices.csv".to_string(), label.clone()),
            ("msp.csv".to_string(), label.clone()),
            ("climate.csv".to_string(), label),
        ]),
        prices: "prices.csv".into(),
        msp: "msp.csv".into(),
        climate: "climate.csv".into(),
        boundary_assignment: "scenario".into(),
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
