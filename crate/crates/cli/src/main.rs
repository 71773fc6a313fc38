//! `infodesign` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "infodesign", version, about = "Repositioning equilibria and revenue-optimal disclosure of a demand shock")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the modelling assumptions and classify market sizes.
    Validate(RunArgs),
    /// Write the regime table of the revenue function.
    Regimes(RunArgs),
    /// Design a disclosure mechanism and certify it.
    Design(RunArgs),
    /// Solve the convex program over posterior-mean distributions.
    Prop8(RunArgs),
    /// Best interval partition on a quantile grid.
    Dp(RunArgs),
    /// Revenue of every mechanism family side by side.
    Compare(RunArgs),
    /// One partition per announced shock scenario.
    Scenarios(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for report files; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Quantile step of the grid and of the cutting-plane seeds, in (0, 0.5].
    #[arg(long, default_value_t = 1.0 / 256.0, value_parser = parse_eps)]
    pub eps: f64,
    /// Recorded in reports; every solver here is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed-form thresholds when the size pattern allows them, otherwise the convex program.
    Auto,
    Alg1,
    Prop8,
    Dp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Alg1 => "alg1",
            Method::Prop8 => "prop8",
            Method::Dp => "dp",
        }
    }
}

fn parse_eps(text: &str) -> Result<f64, String> {
    let eps: f64 = text.parse().map_err(|e| format!("{e}"))?;
    if eps > 0.0 && eps <= 0.5 {
        Ok(eps)
    } else {
        Err(format!("{eps} is outside (0, 0.5]"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<infodesign::ConfigError> for CliError {
    fn from(e: infodesign::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<infodesign::Error> for CliError {
    fn from(e: infodesign::Error) -> Self {
        match e {
            infodesign::Error::Config(e) => CliError::Config(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

macro_rules! solver_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Solver(e.to_string())
            }
        }
    )*};
}

solver_errors!(
    infodesign::ModelError,
    infodesign::EquilibriumError,
    infodesign::MechanismError,
    infodesign::OptimizerError
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Regimes(a) => commands::regimes(a),
        Command::Design(a) => commands::design(a),
        Command::Prop8(a) => commands::prop8(a),
        Command::Dp(a) => commands::dp(a),
        Command::Compare(a) => commands::compare(a),
        Command::Scenarios(a) => commands::scenarios(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_range_is_half_open() {
        assert_eq!(parse_eps("0.5"), Ok(0.5));
        assert!(parse_eps("0").is_err());
        assert!(parse_eps("0.51").is_err());
        assert!(parse_eps("abc").is_err());
    }

    #[test]
    fn config_errors_map_to_exit_2() {
        let err: CliError = infodesign::Error::Config(infodesign::ConfigError::Schema("x".into())).into();
        assert_eq!(err.exit_code(), 2);
        let err: CliError = infodesign::OptimizerError::InvalidEps(1.0).into();
        assert_eq!(err.exit_code(), 3);
    }
}
