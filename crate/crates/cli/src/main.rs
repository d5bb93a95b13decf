use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use admissibility_lab::config::{Experiment, PartialConfig, RunConfig, SystemChoice};
use admissibility_lab::experiments::{self, ExperimentData};

/// Reproduces the two counterexamples on infinite-time admissibility under
/// compact perturbations: diagonal semigroup systems, the resolvent
/// criterion with certified tails, and the collocated feedback diagnostics.
#[derive(Parser)]
#[command(name = "admissibility-lab", version)]
struct Cli {
    /// Experiment to run
    #[arg(value_enum)]
    experiment: Experiment,

    /// JSON config file; command-line flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Truncation window size
    #[arg(long = "N", value_name = "SIZE")]
    n: Option<usize>,

    /// Comma-separated witness / probe indices
    #[arg(long = "n-list", value_name = "LIST", value_delimiter = ',')]
    n_list: Option<Vec<u64>>,

    /// Output directory for result.json and the CSV artifacts
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Target system for criterion-scan and stability-report
    #[arg(long, value_enum)]
    system: Option<SystemChoice>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => {
            let body = match fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
            {
                Ok(b) => b,
                Err(e) => return usage_error(&format!("{e:#}")),
            };
            match serde_json::from_str::<PartialConfig>(&body) {
                Ok(p) => Some(p),
                Err(e) => return usage_error(&format!("config {}: {e}", path.display())),
            }
        }
        None => None,
    };
    let flags = PartialConfig {
        experiment: None,
        n: cli.n,
        beta_profile: None,
        n_list: cli.n_list,
        grid: None,
        out_dir: cli.out,
        tolerances: None,
        system: cli.system,
    };
    let cfg = match RunConfig::resolve(cli.experiment, file, flags) {
        Ok(cfg) => cfg,
        Err(msg) => return usage_error(&msg),
    };

    match experiments::run(&cfg) {
        Ok(result) => {
            println!("experiment: {}", cfg.experiment.name());
            for (k, v) in &result.verdicts {
                println!("  {k}: {v}");
            }
            println!("artifacts: {}", cfg.out_dir.join("result.json").display());
            if let ExperimentData::Selftest { all_passed, .. } = &result.data {
                if !all_passed {
                    eprintln!(
                        "selftest failed; see {}",
                        cfg.out_dir.join("selftest.csv").display()
                    );
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("configuration error: {msg}");
    ExitCode::from(2)
}
