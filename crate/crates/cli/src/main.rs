//! `duality`: run and validate complementarity scenarios.
//!
//! Exit status: 0 success, 2 invalid scenario, 3 fit or computation
//! failure, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use duality_core::scenario::{self, Overrides, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "duality", version, about = "Single-photon Mach-Zehnder complementarity scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for CSV and summary output (overrides the scenario file).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Monte Carlo seed (overrides the scenario file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of grid points between scan.start and scan.stop.
    #[arg(long, global = true)]
    points: Option<usize>,

    /// Suppress the summary on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name).
    Run { scenario: PathBuf },
    /// Validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// List the bundled scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { output_dir: cli.output_dir.clone(), seed: cli.seed, points: cli.points };
    let result = match &cli.command {
        Command::Run { scenario: path } => {
            scenario::validate_scenario(path, &overrides).and_then(|s| scenario::run_scenario(&s)).map(|artifacts| {
                if !cli.quiet {
                    print!("{}", artifacts.summary_text);
                    println!("csv: {} ({} rows)", artifacts.csv.display(), artifacts.rows);
                    println!("summary: {}", artifacts.summary.display());
                }
            })
        }
        Command::Validate { scenario: path } => scenario::validate_scenario(path, &overrides).map(|s| {
            if !cli.quiet {
                println!("ok: {} ({} {} points)", s.name, s.scan.grid.len(), s.scan.axis.name());
            }
        }),
        Command::ListScenarios => {
            for name in scenario::bundled_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(error: ScenarioError) -> ExitCode {
    eprintln!("error: {error}");
    ExitCode::from(error.exit_code() as u8)
}
