//! Command-line driver: scene configs in, CSV, JSON and SVG out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{Context, PlotKind};
pub use config::{Overrides, SceneConfig};
pub use error::{CliError, CliResult};

pub const THREADS_ENV: &str = "ROLLKIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "rollkit",
    version,
    about = "Rolling bodies of revolution: simulation, equilibria, plots and checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scene configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override the conserved momentum.
    #[arg(long, allow_negative_numbers = true)]
    pub ell: Option<f64>,
    /// Seed for randomised verification samples.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlotArg {
    Potential,
    Phase,
    Bifurcation,
    Track,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the reduced flow and reconstruct the full motion.
    Simulate(CommonArgs),
    /// Compare the reduced pipeline with the constrained full dynamics.
    OracleCompare(CommonArgs),
    /// Relative equilibria at one ell, plus an optional bifurcation scan.
    Equilibria(CommonArgs),
    /// Write an SVG plot.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        kind: PlotArg,
    },
    /// Run every identity check and write a certification report.
    Verify(CommonArgs),
}

/// Size the global thread pool from `ROLLKIT_THREADS` when set.
pub fn configure_threads(value: Option<&str>) -> CliResult<()> {
    let Some(v) = value else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::OracleCompare(c) | Command::Equilibria(c) | Command::Verify(c) => c,
        Command::Plot { common, .. } => common,
    };
    let overrides = Overrides {
        ell: common.ell,
        seed: common.seed,
    };
    let ctx = Context::load(&common.config, &common.out, overrides)?;
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&ctx),
        Command::OracleCompare(_) => commands::oracle_compare(&ctx),
        Command::Equilibria(_) => commands::equilibria(&ctx),
        Command::Verify(_) => commands::verify(&ctx),
        Command::Plot { kind, .. } => {
            let kind = match kind {
                PlotArg::Potential => PlotKind::Potential,
                PlotArg::Phase => PlotKind::Phase,
                PlotArg::Bifurcation => PlotKind::Bifurcation,
                PlotArg::Track => PlotKind::Track,
            };
            commands::plot(&ctx, kind)
        }
    }
}
