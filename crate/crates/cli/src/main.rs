//! Command-line front end: scenario ingestion, solver invocation, sweep/CSV
//! emission, brute-force verification, and deterministic scenario
//! generation.
//!
//! Exit codes: 0 success (all verification checks passed), 1 input or usage
//! error, 2 infeasible scenario, 3 oracle refusal (instance too large for
//! exhaustive search).

mod report;
mod scenario;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use eealloc::ee_fixed::optimize_fixed;
use eealloc::ee_joint::optimize_joint;
use eealloc::oracle::{random_scenario, sweep};
use eealloc::waterfill::allocate;
use eealloc::{validate, Error, Mode, Scenario};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible { .. } => 2,
            Error::OracleGuard(_) => 3,
            Error::Domain(_) | Error::Numerical(_) => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Joint,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Fixed => Mode::Fixed,
            ModeArg::Joint => Mode::Joint,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "eealloc",
    version,
    about = "Energy-efficient bandwidth and transmit-power allocation over parallel frequency channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize energy efficiency with the per-user bandwidths given in the scenario
    SolveFixed {
        /// Scenario file (JSON)
        #[arg(long)]
        scenario: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximize energy efficiency with joint bandwidth and power allocation
    SolveJoint {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample sum rate, efficiency, and the derivative sign indicator over the feasible power range
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Number of power samples
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the solution with brute-force oracles and consistency residuals
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Grid steps for the brute-force oracle
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Samples for the sweep cross-check
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Replace the allocation with this JSON file before checking (negative control)
        #[arg(long)]
        debug_inject: Option<PathBuf>,
    },
    /// Generate a deterministic pseudo-random scenario
    Gen {
        #[arg(long)]
        seed: u64,
        /// Number of users
        #[arg(long)]
        users: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Write the scenario here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors; everything else is an input error
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(u8::try_from(e.code).unwrap_or(1))
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| CliError {
            code: 1,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(|e| CliError {
                code: 1,
                message: format!("cannot write to stdout: {e}"),
            })
        }
    }
}

fn load_validated(path: &Path, mode: Mode) -> Result<(Scenario, String), CliError> {
    let (scenario, digest) = scenario::load(path)?;
    let violations = validate(&scenario, mode);
    if !violations.is_empty() {
        let mut message = String::from("invalid scenario:");
        for v in &violations {
            message.push_str("\n  - ");
            message.push_str(&v.to_string());
        }
        return Err(CliError { code: 1, message });
    }
    Ok((scenario, digest))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::SolveFixed { scenario: path, out } => {
            let (scenario, digest) = load_validated(&path, Mode::Fixed)?;
            let result = optimize_fixed(&scenario)?;
            let (_, diag) = allocate(&scenario, result.p_opt)?;
            let text = report::fixed_report(&digest, &scenario, &result, &diag);
            emit(out.as_deref(), &text)
        }
        Command::SolveJoint { scenario: path, out } => {
            let (scenario, digest) = load_validated(&path, Mode::Joint)?;
            let result = optimize_joint(&scenario)?;
            let text = report::joint_report(&digest, &scenario, &result);
            emit(out.as_deref(), &text)
        }
        Command::Sweep { scenario: path, mode, samples, out } => {
            if samples < 2 {
                return Err(CliError {
                    code: 1,
                    message: "sweep needs at least 2 samples".to_string(),
                });
            }
            let mode = Mode::from(mode);
            let (scenario, _) = load_validated(&path, mode)?;
            let curve = sweep(&scenario, mode, samples)?;
            emit(out.as_deref(), &report::sweep_csv(&curve))
        }
        Command::Verify { scenario: path, mode, steps, samples, debug_inject } => {
            if samples < 2 || steps < 10 {
                return Err(CliError {
                    code: 1,
                    message: "verify needs at least 2 samples and 10 steps".to_string(),
                });
            }
            let mode = Mode::from(mode);
            let (scenario, digest) = load_validated(&path, mode)?;
            let checks = verify::run(&scenario, mode, steps, samples, debug_inject.as_deref())?;
            let mut all_pass = true;
            let mut text = format!("scenario {digest} ({} mode)\n", mode.as_str());
            for c in &checks {
                all_pass &= c.pass;
                text.push_str(&format!(
                    "{} {} ({})\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
            emit(None, &text)?;
            if all_pass {
                Ok(())
            } else {
                Err(CliError { code: 1, message: "verification failed".to_string() })
            }
        }
        Command::Gen { seed, users, mode, out } => {
            if users == 0 {
                return Err(CliError { code: 1, message: "need at least one user".to_string() });
            }
            let mode = Mode::from(mode);
            let scenario = random_scenario(seed, users, mode);
            debug_assert!(validate(&scenario, mode).is_empty());
            let text = scenario::ScenarioFile::from_scenario(&scenario).to_json();
            emit(out.as_deref(), &text)
        }
    }
}
