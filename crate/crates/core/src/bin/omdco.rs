use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omdco_core::harness::{self, ExperimentConfig};
use omdco_core::{selftest, Error};

#[derive(Parser)]
#[command(
    name = "omdco",
    version,
    about = "Online mixed discrete and continuous optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write summary.csv into the output directory
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `output` entry, then the current directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the submodularity ratio, curvature and alpha of a config's rewards
    OracleProfile {
        #[arg(long)]
        config: PathBuf,
        /// Rounds of the first trial to scan
        #[arg(long, default_value_t = 200)]
        rounds: usize,
    },
    /// Run the built-in invariant checks
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| config.output.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let summary = harness::run_experiment(&config)?;
            let path = dir.join("summary.csv");
            summary.write_csv(&path)?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Command::OracleProfile { config, rounds } => {
            let config = ExperimentConfig::load(&config)?;
            let p = harness::profile_config(&config, rounds)?;
            println!("kappa = {:.6}", p.kappa);
            println!("curvature = {:.6}", p.curvature);
            println!("alpha = {:.6}", p.alpha);
            Ok(true)
        }
        Command::Selftest { seed } => {
            let checks = selftest::run_all(seed)?;
            for c in &checks {
                println!(
                    "{:<22} {}  {}",
                    c.name,
                    if c.passed { "ok" } else { "FAILED" },
                    c.detail
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
