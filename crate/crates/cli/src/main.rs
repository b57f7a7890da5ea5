//! `fopfdd`: evaluate the fractional diffusive delay, build RC ladders, fit
//! process models and regenerate the parameter and step-error tables.

mod commands;
mod failure;
mod output;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::{CliResult, Failure};
use crate::output::{Format, Output};

#[derive(Debug, Parser)]
#[command(name = "fopfdd", version, about)]
struct Cli {
    /// Seed of every random choice; runs with the same seed are identical.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format of array outputs. Summaries and manifests are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Impulse response of exp(-(L s)^alpha) from its series, with area and
    /// energy diagnostics.
    Impulse(commands::ImpulseArgs),
    /// Bode data of a ladder, a model or the bare delay term.
    Freqresp(commands::FreqRespArgs),
    /// State-space matrices, transfer function and break frequency of a ladder.
    Ladder(commands::LadderArgs),
    /// Pareto-front fit of a model family to a ladder or a sampled response.
    Fit(commands::FitArgs),
    /// Step response of a ladder, a model or the bare delay term.
    Stepresp(commands::StepRespArgs),
    /// Fitted parameters and step errors for a range of ladder sizes.
    Tables(commands::TablesArgs),
}

/// `FDD_THREADS` caps the worker pool; 0 or unset leaves it automatic.
fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FDD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::usage("FDD_THREADS", format!("expected a thread count, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.into()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let mut out = Output::new(cli.out, cli.format)?;
    let seed = cli.seed;
    match &cli.command {
        Command::Impulse(a) => commands::impulse(a, seed, &mut out),
        Command::Freqresp(a) => commands::freqresp(a, seed, &mut out),
        Command::Ladder(a) => commands::ladder(a, seed, &mut out),
        Command::Fit(a) => commands::fit(a, seed, &mut out),
        Command::Stepresp(a) => commands::stepresp(a, seed, &mut out),
        Command::Tables(a) => commands::tables(a, seed, &mut out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests;
