//! Command-line front end for the `l1dom` estimator: estimates on user
//! data, Monte Carlo experiments, domination thresholds and noise-basis
//! design. File formats are described in `docs/formats.md`.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "l1dom", version, about = "Minimum-l1 estimation that dominates least squares")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least-squares and minimum-l1 estimates for one data vector.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment from a config file.
    Simulate(SimulateArgs),
    /// Noise variance above which the minimum-l1 estimator wins.
    Threshold(ThresholdArgs),
    /// Build a noise basis with prescribed generalized singular value ratios.
    DesignBasis(DesignBasisArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Equality,
    Residual,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "residual")]
    pub mode: ModeArg,
    /// Residual bound; defaults to sqrt(sigma2)/100 from the model file.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Randomizes tie-breaking among optimal vertices (equality mode).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("knowledge").required(true).args(["xi", "tau_b"]))]
pub struct ThresholdArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// File with the true parameters.
    #[arg(long)]
    pub xi: Option<PathBuf>,
    /// Known bound on ||xi||^2.
    #[arg(long, requires = "sigma2")]
    pub tau_b: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DesignBasisArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub ratios: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Threshold(a) => commands::threshold(&a),
        Command::DesignBasis(a) => commands::design_basis(&a),
    }
}
