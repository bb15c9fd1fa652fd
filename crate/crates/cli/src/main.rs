mod config;
mod error;
mod output;
mod studies;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Experiment;
use crate::error::CliError;
use crate::output::Sink;
use crate::studies::Study;

/// Experiment runner for fifth-order KdV flows and Green's-function
/// diagnostics.
#[derive(Parser)]
#[command(name = "kdv5", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config, run its study, write outputs and print one
    /// PASS/FAIL line per invariant.
    Run { config: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// List the available studies.
    ListStudies,
}

/// Exit code when the run completed but an invariant failed.
const INVARIANT_FAILED: u8 = 3;

fn run(path: &Path) -> Result<u8, CliError> {
    let exp = Experiment::load(path)?;
    let study = exp.config.study;
    let mut sink = Sink::new(&exp.output_dir)?;
    let checks = study.run(&exp, &mut sink)?;
    for c in &checks {
        println!("{c}");
    }
    Ok(if checks.iter().all(|c| c.pass) {
        0
    } else {
        INVARIANT_FAILED
    })
}

fn validate(path: &Path) -> Result<u8, CliError> {
    let exp = Experiment::load(path)?;
    let g = exp.grid;
    println!(
        "OK {}: study {}, flow {}, L = {}, N = {}",
        path.display(),
        exp.config.study.name(),
        exp.flow.kind.name(),
        g.length(),
        g.points()
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(config),
        Command::Validate { config } => validate(config),
        Command::ListStudies => {
            for s in Study::ALL {
                println!("{:<18} {}", s.name(), s.description());
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::from(record.exit_code)
        }
    }
}
