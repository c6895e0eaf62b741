//! Command-line front end. Exit codes: 0 ok, 1 usage or config error,
//! 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use super::{io, run_experiment, sweep_coupling, sweep_table, threshold_summary, ExperimentConfig};
use crate::analysis::{classify, equivalence_report, ClassifierConfig};
use crate::equilibria::{default_grid, find_equilibria};
use crate::error::{Error, Result};
use crate::model::OscillatorSystem;
use crate::par::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "kuramoto-sync",
    version,
    about = "Simulate and classify generalized Kuramoto networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config; writes the files named under "outputs" and prints the summary.
    Simulate { config: PathBuf },
    /// Classify a trajectory CSV against the system it was produced from.
    Classify {
        trajectory: PathBuf,
        system: PathBuf,
        /// Classifier settings as JSON (defaults otherwise).
        #[arg(long)]
        classifier: Option<PathBuf>,
    },
    /// Necessary-condition thresholds for a system.
    Thresholds { system: PathBuf },
    /// Equilibria of the reduced phase-difference system.
    Equilibria {
        system: PathBuf,
        /// Seeds per dimension (default depends on n).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Rerun a uniform-coupling config over several coupling strengths.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        lambdas: Vec<f64>,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config } => {
            let cfg = ExperimentConfig::from_json(&io::read_text(&config)?)?;
            print_json(&run_experiment(&cfg)?)
        }
        Command::Classify {
            trajectory,
            system,
            classifier,
        } => {
            let system = io::read_system(&system)?;
            let cfg: ClassifierConfig = match classifier {
                Some(p) => io::read_json(&p)?,
                None => ClassifierConfig::default(),
            };
            cfg.validate()?;
            let traj = read_trajectory_any_frame(&trajectory, &system)?;
            let verdict = classify(&traj, &cfg)?;
            let equivalence = equivalence_report(&verdict, traj.system());
            print_json(&serde_json::json!({ "verdict": verdict, "equivalence": equivalence }))
        }
        Command::Thresholds { system } => {
            print_json(&threshold_summary(&io::read_system(&system)?))
        }
        Command::Equilibria { system, grid, tol } => {
            let system = io::read_system(&system)?;
            let grid = grid.unwrap_or_else(|| default_grid(system.n()));
            let set = find_equilibria(&system, grid, tol, Execution::default())?;
            print_json(&set.roots)
        }
        Command::Sweep {
            config,
            lambdas,
            out,
            sequential,
        } => {
            let cfg = ExperimentConfig::from_json(&io::read_text(&config)?)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::default()
            };
            let table = sweep_table(&lambdas, &sweep_coupling(&cfg, &lambdas, exec)?);
            if let Some(path) = out {
                std::fs::write(&path, &table).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            }
            emit(&table)
        }
    }
}

/// A CSV may have been written for the system as given or for its
/// normalized form; the first recorded velocity tells which.
fn read_trajectory_any_frame(
    path: &Path,
    system: &OscillatorSystem,
) -> Result<crate::integrator::Trajectory> {
    let text = io::read_text(path)?;
    let normalized = system.normalize_frequencies();
    let mut last_err = None;
    for candidate in [system, &normalized] {
        match io::read_trajectory_csv(text.as_bytes(), candidate) {
            Ok(traj) if !traj.is_empty() => {
                let f = candidate.vector_field(traj.theta(0));
                let scale = 1.0 + candidate.parameter_scale();
                if f.iter()
                    .zip(traj.theta_dot(0))
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * scale)
                {
                    return Ok(traj);
                }
            }
            Ok(_) => return Err(Error::Config("trajectory CSV has no rows".into())),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Config("recorded velocities match neither the system nor its normalized form".into())
    }))
}
