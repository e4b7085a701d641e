use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use riesz_smc_cli::{run, Experiment, ExperimentConfig, Report};

/// Run one of the Chebyshev particle experiments.
#[derive(Debug, Parser)]
#[command(name = "riesz-smc", version)]
struct Args {
    experiment: Experiment,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated master seeds (overrides the config).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(report) => {
            let failures = match &report {
                Report::LgssFilterTable(r) => r.failures.len(),
                Report::LgssPmh(r) => r.failures.len(),
                Report::SvRealData(r) => r.failures.len(),
                _ => 0,
            };
            if failures > 0 {
                eprintln!("{failures} cell(s) failed; see the run tables in the output directory");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(args: &Args) -> anyhow::Result<Report> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    let report = run(args.experiment, &cfg)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(report)
}
