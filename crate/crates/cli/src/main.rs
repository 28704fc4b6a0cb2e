//! `moran`: generate graphs, estimate and solve extinction probabilities,
//! and run the verification suites.
//!
//! Exit codes: 0 when every check passes (or for pure data runs), 1 when a
//! check fails, 2 for usage, configuration or I/O errors.

mod estimate;
mod exact;
mod generate;
mod output;
mod source;
mod sweep;
mod verify;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "moran", version, about = "Moran process experiments on graphs")]
struct Cli {
    /// Worker threads for Monte-Carlo batches (default: all cores). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write it as JSON (or an edge list for other extensions).
    Generate(generate::GenerateArgs),
    /// Monte-Carlo extinction estimates with confidence intervals.
    Estimate(estimate::EstimateArgs),
    /// Exact extinction probabilities for small strongly connected graphs.
    Exact(exact::ExactArgs),
    /// Run a verification suite; exits 1 if any non-vacuous check fails.
    Verify {
        #[command(subcommand)]
        suite: verify::Suite,
    },
    /// Extinction estimates across graph families, one CSV row per graph.
    AmplifySweep(sweep::SweepArgs),
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, configuration, or I/O.
    Usage(String),
    /// The run completed but at least one check failed.
    Checks(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Checks(m) => write!(f, "FAIL: {m}"),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Usage(e.to_string())
            }
        }
    )*};
}
usage_from!(moran_core::Error, std::io::Error, csv::Error, serde_json::Error, rayon::ThreadPoolBuildError);

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Exact(a) => exact::run(a),
        Command::Verify { suite } => verify::run(suite),
        Command::AmplifySweep(a) => sweep::run(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on parse errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                Failure::Checks(_) => ExitCode::from(1),
                Failure::Usage(_) => ExitCode::from(2),
            }
        }
    }
}
