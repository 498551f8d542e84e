//! Command-line front end.
//!
//! | exit | outcome |
//! |------|---------|
//! | 0 | success; for `solve` and `verify`, certified |
//! | 1 | self-test failure or internal error |
//! | 2 | invalid configuration, solution file or multipliers |
//! | 3 | no existence route, divergent partition function or inadmissible problem |
//! | 4 | solver did not converge |
//! | 5 | certificate rejected |

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use commands::{load_solution, SolutionFile};
pub use config::{parse_config, ProblemConfig};
pub use report::{RunReport, Settings, WorkCounters};

/// Environment variable that overrides every seed in the configuration.
pub const SEED_VAR: &str = "MAXENT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Success = 0,
    Failure = 1,
    InvalidInput = 2,
    NoExistence = 3,
    NotConverged = 4,
    Rejected = 5,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Stable label written to reports.
    pub fn status(self) -> &'static str {
        match self {
            Self::Success => "ok",
            Self::Failure => "failure",
            Self::InvalidInput => "invalid-input",
            Self::NoExistence => "no-existence",
            Self::NotConverged => "not-converged",
            Self::Rejected => "rejected",
        }
    }

    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::InvalidMultipliers(_)
            | Error::LengthMismatch { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonFiniteInput { .. }
            | Error::InvalidFunction(_)
            | Error::InvalidSupport(_)
            | Error::InvalidProblem(_)
            | Error::InvalidWeight { .. }
            | Error::NotDeclared(_)
            | Error::DeclarationInconsistent { .. } => Self::InvalidInput,
            Error::UnboundedBelow { .. }
            | Error::LowerBoundViolated { .. }
            | Error::DivergentIntegral { .. }
            | Error::DivergentPartition(_) => Self::NoExistence,
            Error::NotConverged { .. } => Self::NotConverged,
            _ => Self::Failure,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "maxent", version, about = "Maximum-entropy densities under moment inequality constraints")]
pub struct Cli {
    /// Problem configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving the report and density CSV.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Solve even when no existence route is found.
    #[arg(long, global = true)]
    pub force: bool,
    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagnose, solve and certify; write the report and density CSV.
    Solve,
    /// Certify multipliers read from a solution file.
    Verify {
        /// JSON with `lambda` and optional `alpha`, `entropy`; a report
        /// from `solve` also works.
        #[arg(long, value_name = "PATH")]
        solution: PathBuf,
    },
    /// Print the density at points read from stdin, one per line.
    Eval {
        /// Use these multipliers instead of solving.
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Print independent draws from the density, one per line.
    Sample {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        solution: Option<PathBuf>,
    },
    /// Check the sufficient conditions for existence.
    Diagnose,
    /// Run the built-in analytic fixtures through solve, certify and the
    /// grid oracle.
    Selftest {
        #[arg(long, default_value_t = 1e-8)]
        solver_tol: f64,
        /// Evaluation budget per integration.
        #[arg(long)]
        budget: Option<usize>,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::InvalidInput.code() } else { ExitCode::Success.code() };
            let _ = e.print();
            return code;
        }
    };
    let seed = match std::env::var(SEED_VAR) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(s) => Some(s),
            Err(_) => {
                eprintln!("error: {SEED_VAR} must be a non-negative integer, got {v:?}");
                return ExitCode::InvalidInput.code();
            }
        },
        Err(_) => None,
    };
    commands::dispatch(&cli, seed).code()
}
