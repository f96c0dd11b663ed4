use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn agrivol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agrivol"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, data: &Path) -> PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "config_version": 1,
  "dataset": "{}",
  "exog": {{ "variables": ["tasmax", "pr"], "anomalies": true }},
  "pricing": {{ "mc_check_paths": 0 }},
  "output_dir": "out"
}}"#,
        data.display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_then_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = agrivol(&["synth", "--out", data.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["prices.csv", "msp.csv", "climate.csv", "manifest.json"] {
        assert!(data.join(f).is_file(), "{f}");
    }

    let cfg = write_config(dir.path(), &data);
    let out = agrivol(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--scenario",
        "ssp585",
        "--sequential",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fit-sarimax"), "{stdout}");
    let out_dir = dir.path().join("out");
    assert!(out_dir.join("manifest.json").is_file());
    assert!(out_dir.join("fig4_sarimax_forecast_ssp585.csv").is_file());
    assert!(!out_dir.join("fig4_sarimax_forecast_ssp245.csv").exists());

    // A single stage re-run against the existing artifacts.
    let other = dir.path().join("other");
    let out = agrivol(&[
        "ingest",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(other.join("ingest.json").is_file());
    let out = agrivol(&[
        "forecast",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "missing upstream artifacts are a data error");
    assert!(String::from_utf8_lossy(&out.stderr).contains("egarch_model.json"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = agrivol(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let cfg = write_config(dir.path(), &dir.path().join("no-such-data"));
    let out = agrivol(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "config_version": 1, "dataset": ".", "colour": "blue" }"#).unwrap();
    let out = agrivol(&["trend", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn bad_scenario_label_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&agrivol(&["synth", "--out", data.to_str().unwrap()])), 0);
    let cfg = write_config(dir.path(), &data);
    let out = agrivol(&["run", "--config", cfg.to_str().unwrap(), "--scenario", "RCP8.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&agrivol(&["synth", "--out", data.to_str().unwrap()])), 0);
    std::fs::write(data.join("prices.csv"), "month,price\n2001-10,900\n2001-12,910\n").unwrap();
    let cfg = write_config(dir.path(), &data);
    let out = agrivol(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors() {
    let out = agrivol(&["run"]);
    assert_eq!(code(&out), 2);
    let out = agrivol(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fit-egarch"));
}

#[test]
fn numeric_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&agrivol(&["synth", "--out", data.to_str().unwrap()])), 0);
    // A flat price history has no volatility to fit.
    let mut prices = String::from("month,price\n");
    for y in 2001..=2024 {
        for m in 1..=12 {
            if (y, m) >= (2001, 10) {
                prices.push_str(&format!("{y}-{m:02},1000\n"));
            }
        }
    }
    std::fs::write(data.join("prices.csv"), prices).unwrap();
    let cfg = write_config(dir.path(), &data);
    let out = agrivol(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}
