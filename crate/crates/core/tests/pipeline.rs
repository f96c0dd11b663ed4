mod common;

use std::path::{Path, PathBuf};

use agrivol::egarch::EgarchFit;
use agrivol::ingest::Scenario;
use agrivol::pipeline::{
    fig4_file, premium_csv_file, run_pipeline, run_stage, write_synthetic_bundle, IngestArtifact, Manifest, MspPolicy,
    PipelineConfig, SpotPolicy, Stage, SyntheticOptions, EGARCH_FILE, FIG5_FILE, INGEST_FILE, MANIFEST_FILE,
    PREMIUM_COLUMNS, RUN_REPORT_FILE, TREND_FILE,
};
use agrivol::series::{mann_kendall, ols_trend, MonthStamp};
use agrivol::Error;

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(repo_root().join("configs/synthetic.json")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg.pricing.mc_check_paths = 0;
    cfg
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stage_by_stage_run_reproduces_full_run() {
    let full = tempfile::tempdir().unwrap();
    let staged = tempfile::tempdir().unwrap();
    run_pipeline(&config(full.path())).unwrap();
    let cfg = config(staged.path());
    for stage in Stage::ALL {
        run_stage(stage, &cfg).unwrap();
    }
    let a: Manifest = read_json(&full.path().join(MANIFEST_FILE));
    let b: Manifest = read_json(&staged.path().join(MANIFEST_FILE));
    assert!(a.complete && b.complete);
    assert_eq!(a.files, b.files);
}

#[test]
fn report_needs_forecasts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    for stage in [Stage::Ingest, Stage::Trend, Stage::FitEgarch, Stage::FitSarimax] {
        run_stage(stage, &cfg).unwrap();
    }
    let err = run_stage(Stage::Report, &cfg).unwrap_err();
    let inner = match &err {
        Error::Stage { source, .. } => source.as_ref(),
        e => e,
    };
    match inner {
        Error::MissingUpstream { producer, .. } => assert_eq!(producer, "forecast"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn stage_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    run_pipeline(&cfg).unwrap();

    let ing: IngestArtifact = read_json(&dir.path().join(INGEST_FILE));
    let egarch: EgarchFit = read_json(&dir.path().join(EGARCH_FILE));
    assert_eq!(egarch.sigma.len(), ing.returns.len());
    assert_eq!(egarch.sigma.range(), ing.returns.range());
    assert!(egarch.sigma.values().iter().all(|s| *s > 0.0));

    // Trend table against direct calls on the ensemble means.
    let (header, rows) = read_csv(&dir.path().join(TREND_FILE));
    assert_eq!(header[0], "variable");
    assert_eq!(rows.len(), ing.climate.len());
    for (row, mean) in rows.iter().zip(&ing.climate) {
        let mk = mann_kendall(&mean.series, cfg.report.trend_alpha).unwrap();
        let (slope, _) = ols_trend(&mean.series).unwrap();
        assert_eq!(row[0], mean.variable.to_string());
        assert_eq!(row[1], mean.scenario.to_string());
        assert_eq!(row[5].parse::<i64>().unwrap(), mk.s_statistic);
        assert_eq!(row[8].parse::<f64>().unwrap(), mk.p_value);
        assert!((row[10].parse::<f64>().unwrap() - 120.0 * slope).abs() < 1e-9 * (1.0 + slope.abs()));
    }

    // Phases are three contiguous blocks in order.
    for s in Scenario::PROJECTIONS {
        let (_, rows) = read_csv(&dir.path().join(fig4_file(s)));
        let mut blocks: Vec<(String, usize)> = Vec::new();
        for r in &rows {
            match blocks.last_mut() {
                Some((p, n)) if *p == r[1] => *n += 1,
                _ => blocks.push((r[1].clone(), 1)),
            }
        }
        let names: Vec<&str> = blocks.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(names, ["historical", "validation", "forecast"]);
        let observed = (blocks[0].1 + blocks[1].1) as f64;
        assert!((blocks[1].1 as f64 / observed - 0.2).abs() < 0.01);
        let last: MonthStamp = rows.last().unwrap()[0].parse().unwrap();
        assert_eq!(last, cfg.horizon_end);
        // The observed block ends with the last price.
        let first_forecast: MonthStamp = rows[blocks[0].1 + blocks[1].1][0].parse().unwrap();
        assert_eq!(first_forecast, ing.prices.end().succ());
    }

    let (header, rows) = read_csv(&dir.path().join(premium_csv_file(Scenario::Ssp245)));
    assert_eq!(header, PREMIUM_COLUMNS);
    for r in &rows {
        let annual: f64 = r[6].parse().unwrap();
        let monthly: f64 = r[5].parse().unwrap();
        assert!((annual - monthly * 12f64.sqrt()).abs() < 1e-12 * annual.max(1.0));
    }
}

#[test]
fn single_scenario_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.scenarios = vec![Scenario::Ssp585];
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.scenarios, vec![Scenario::Ssp585]);
    let (_, rows) = read_csv(&dir.path().join(FIG5_FILE));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] == "SSP5-8.5"));
    assert!(dir.path().join(fig4_file(Scenario::Ssp585)).is_file());
    assert!(!dir.path().join(fig4_file(Scenario::Ssp245)).exists());
}

#[test]
fn missing_prices_fail_preflight() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_synthetic_bundle(&data, SyntheticOptions::default()).unwrap();
    std::fs::remove_file(data.join("prices.csv")).unwrap();
    let mut cfg = PipelineConfig::for_dataset(&data);
    cfg.output_dir = dir.path().join("out");
    match run_pipeline(&cfg) {
        Err(Error::Config(msg)) => assert!(msg.contains("prices.csv"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(!cfg.output_dir.exists());
}

#[test]
fn failed_stage_leaves_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spot = dir.path().join("spot.csv");
    let mut text = String::from("month,price\n");
    for y in 2025..=2030 {
        for m in 1..=12 {
            text.push_str(&format!("{y}-{m:02},1000\n"));
        }
    }
    std::fs::write(&spot, text).unwrap();
    let mut cfg = config(&dir.path().join("out"));
    cfg.pricing.spot_policy = SpotPolicy::Path { file: spot };
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(
        matches!(err, Error::Stage { ref stage, .. } if stage == "price"),
        "{err}"
    );
    let manifest: Manifest = read_json(&cfg.output_dir.join(MANIFEST_FILE));
    assert!(!manifest.complete);
    assert!(manifest.files.iter().any(|f| f.file == INGEST_FILE));
    assert!(!manifest.files.iter().any(|f| f.file == FIG5_FILE));
    let report: serde_json::Value = read_json(&cfg.output_dir.join(RUN_REPORT_FILE));
    assert_eq!(report["complete"], false);
    let stages = report["stages"].as_array().unwrap();
    assert_eq!(stages.last().unwrap()["status"], "failed");
}

#[test]
fn pricing_policies_shape_the_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.scenarios = vec![Scenario::Ssp245];
    cfg.pricing.msp_policy = MspPolicy::Growth { annual_rate: 0.05 };
    cfg.pricing.spot_policy = SpotPolicy::LinearTrend;
    run_pipeline(&cfg).unwrap();
    let ing: IngestArtifact = read_json(&dir.path().join(INGEST_FILE));
    let (_, rows) = read_csv(&dir.path().join(premium_csv_file(Scenario::Ssp245)));
    let at = |m: MonthStamp| rows.iter().find(|r| r[0] == m.to_string()).unwrap();
    let last = ing.prices.end();
    let msp_last = ing.msp.values().last().copied().unwrap();
    let msp = |k: i64| at(last.add_months(k))[4].parse::<f64>().unwrap();
    assert_eq!(msp(0), msp_last);
    assert_eq!(msp(11), msp_last);
    assert!((msp(12) / msp_last - 1.05).abs() < 1e-12);
    assert!((msp(120) / msp_last - 1.05f64.powi(10)).abs() < 1e-9);

    let (slope, icpt) = ols_trend(&ing.prices).unwrap();
    let n = ing.prices.len() as f64;
    for k in [1i64, 24, 300] {
        let spot: f64 = at(last.add_months(k))[3].parse().unwrap();
        let expect = icpt + slope * (n + k as f64 - 1.0);
        assert!((spot - expect).abs() < 1e-9 * expect, "{k}: {spot} vs {expect}");
    }
}
