//! Command-line driver: graph statistics, pairwise bound traces, column
//! queries with oracle comparison, and benchmark sweeps.
//!
//! Every command writes its results under `--out-dir`. Score files are
//! deterministic for a given input, configuration and seed; wall-clock
//! timings go to separate `*_timings.csv` files.

mod bench;
mod column;
mod config;
mod output;
mod pairwise;
mod stats;

use std::ffi::OsString;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub use config::{AlphaArg, GraphArgs, GraphFormat, KindArg, ScalingArg};

#[derive(Debug, Parser)]
#[command(name = "proxbound", version, about = "Katz scores and commute times on sparse graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize the largest connected component of a graph.
    Stats(stats::StatsArgs),
    /// Two-sided bounds on one pairwise score, with an optional CG baseline.
    Pairwise(pairwise::PairwiseArgs),
    /// One column of scores, compared against the dense oracle on small graphs.
    Column(column::ColumnArgs),
    /// Sampled benchmark sweeps.
    Bench(bench::BenchArgs),
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(Cli::try_parse_from(args)?)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(a) => stats::run(&a),
        Command::Pairwise(a) => pairwise::run(&a),
        Command::Column(a) => column::run(&a),
        Command::Bench(a) => bench::run(&a),
    }
}
