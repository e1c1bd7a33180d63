//! `udrd`: rate-distortion curves under the uncorrelated-distortion constraint.

mod commands;
mod output;
mod source;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<udrd::Error> for CliError {
    fn from(e: udrd::Error) -> Self {
        match e {
            udrd::Error::UnknownStrategy { .. } => CliError::input(e.to_string()),
            other => CliError::domain(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Nats,
    Bits,
}

impl From<UnitsArg> for udrd::Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Nats => udrd::Units::Nats,
            UnitsArg::Bits => udrd::Units::Bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "udrd",
    version,
    about = "Gaussian rate-distortion under uncorrelated distortion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON source document with exactly one source key.
    #[arg(long)]
    pub input: PathBuf,
    /// Eigensolver for covariance inputs (default: chosen by matrix order).
    #[arg(long)]
    pub eigensolver: Option<String>,
    /// Quadrature rule for process inputs; intervals come from UDRD_QUAD_POINTS.
    #[arg(long, default_value = "simpson")]
    pub quadrature: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one point of the curves at a distortion or a rate.
    Point(commands::PointArgs),
    /// Evaluate the curves over a distortion range.
    Sweep(commands::SweepArgs),
    /// Compare Toeplitz truncations of a process against its spectral value.
    Converge(commands::ConvergeArgs),
    /// Run the oracle checks and emit a JSON report.
    Validate(commands::ValidateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Point(a) => commands::point(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Converge(a) => commands::converge(&a),
        Command::Validate(a) => commands::validate(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("udrd: {e}");
            ExitCode::from(e.code)
        }
    }
}
