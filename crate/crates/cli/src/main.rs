use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use agrivol::ingest::Scenario;
use agrivol::pipeline::{run_pipeline, run_stage, write_synthetic_bundle, PipelineConfig, Stage, SyntheticOptions};
use agrivol::{Error, ErrorKind};

#[derive(Parser)]
#[command(
    name = "agrivol",
    version,
    about = "Climate-driven crop price volatility and MSP put premiums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the run to one scenario, e.g. SSP5-8.5.
    #[arg(long)]
    scenario: Option<String>,
    /// Disable data-parallel execution.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Read and align prices, MSP and climate data.
    Ingest(Common),
    /// Mann-Kendall and OLS trends of the climate ensemble means.
    Trend(Common),
    /// Fit EGARCH to the price log-returns.
    FitEgarch(Common),
    /// Fit SARIMAX to the EGARCH volatility.
    FitSarimax(Common),
    /// Forecast volatility per scenario.
    Forecast(Common),
    /// Price the MSP put per month.
    Price(Common),
    /// Write figure tables, manifest and run report.
    Report(Common),
    /// Run every stage.
    Run(Common),
    /// Write the synthetic dataset bundle.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(c: &Common) -> agrivol::Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &c.scenario {
        let s: Scenario = s.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        cfg.scenarios = vec![s];
    }
    if c.sequential {
        cfg.parallel = false;
    }
    Ok(cfg)
}

fn execute(cmd: Command) -> agrivol::Result<()> {
    let (stage, common) = match cmd {
        Command::Synth { out, seed } => {
            let mut opts = SyntheticOptions::default();
            if let Some(seed) = seed {
                opts.seed = seed;
            }
            write_synthetic_bundle(&out, opts)?;
            println!("wrote synthetic bundle to {}", out.display());
            return Ok(());
        }
        Command::Run(c) => {
            let cfg = load(&c)?;
            let report = run_pipeline(&cfg)?;
            for s in &report.stages {
                println!("{:<12} {:>8.3}s", s.stage.name(), s.seconds);
            }
            println!(
                "{} files written to {}",
                report.manifest.files.len(),
                cfg.output_dir.display()
            );
            return Ok(());
        }
        Command::Ingest(c) => (Stage::Ingest, c),
        Command::Trend(c) => (Stage::Trend, c),
        Command::FitEgarch(c) => (Stage::FitEgarch, c),
        Command::FitSarimax(c) => (Stage::FitSarimax, c),
        Command::Forecast(c) => (Stage::Forecast, c),
        Command::Price(c) => (Stage::Price, c),
        Command::Report(c) => (Stage::Report, c),
    };
    let cfg = load(&common)?;
    run_stage(stage, &cfg)?;
    println!("{stage}: done");
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
