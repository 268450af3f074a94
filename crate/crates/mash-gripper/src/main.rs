//! Command-line front end: scenario simulation, characterization sweeps,
//! parameter calibration, and scenario validation.
//!
//! Exit codes: 0 on success, 1 for validation and usage problems, 2 for
//! numeric failures, 3 when a simulation ends in a timeout or abort.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use mash_gripper::calibrate::{calibrate, CalibrationProblem};
use mash_gripper::characterize::{characterize, CharacterizeConfig, SweepKind};
use mash_gripper::scenario::Scenario;
use mash_gripper::sim::{run_scenario, Terminal};
use mash_gripper::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mash-gripper",
    version,
    about = "Simulator and bench tools for a brake-steered soft gripper"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario through the closed-loop simulator and emit the log.
    Simulate {
        /// Scenario description (JSON).
        scenario: PathBuf,
        /// Write the run log here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit one characterization sweep as a CSV table.
    Characterize {
        /// Sweep kind: brake_force, brake_response, extension, aperture,
        /// or stiffness.
        kind: String,
        /// Sweep grids and hardware models (JSON); defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit model parameters to a measurement dataset.
    Calibrate {
        /// Calibration problem (JSON).
        problem: PathBuf,
        /// Write the fitted parameters here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and list every violation.
    Validate {
        /// Scenario description (JSON).
        scenario: PathBuf,
    },
}

/// Parent directory of a scenario file; relative paths inside the scenario
/// resolve against it.
fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let sc = Scenario::from_path(&scenario)?;
            let log = run_scenario(&sc, &base_dir(&scenario))?;
            emit(&log.to_json()?, out.as_deref())?;
            let last_t = log.records.last().map_or(0.0, |r| r.t_s);
            eprintln!(
                "scenario {:?}: {} after {:.2} s ({} records)",
                log.scenario,
                match log.terminal {
                    Terminal::Completed => "completed",
                    Terminal::Timeout => "timed out",
                    Terminal::Abort => "aborted",
                },
                last_t,
                log.records.len()
            );
            Ok(match log.terminal {
                Terminal::Completed => 0,
                Terminal::Timeout | Terminal::Abort => 3,
            })
        }
        Command::Characterize { kind, config, out } => {
            let kind = SweepKind::from_name(&kind)?;
            let cfg = match config {
                Some(path) => CharacterizeConfig::from_path(&path)?,
                None => CharacterizeConfig::default(),
            };
            let table = characterize(kind, &cfg)?;
            emit(&table.to_csv(), out.as_deref())?;
            Ok(0)
        }
        Command::Calibrate { problem, out } => {
            let p = CalibrationProblem::from_path(&problem)?;
            let fit = calibrate(&p)?;
            let mut text = serde_json::to_string_pretty(&fit)?;
            text.push('\n');
            emit(&text, out.as_deref())?;
            Ok(0)
        }
        Command::Validate { scenario } => {
            let sc = Scenario::from_path(&scenario)?;
            sc.validate(&base_dir(&scenario))?;
            println!("ok: scenario {:?} is valid", sc.name);
            Ok(0)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
