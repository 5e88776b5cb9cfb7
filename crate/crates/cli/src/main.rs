//! `quasireal`: constructions and checks for finite-memory process models.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 invalid input or
//! construction error, 3 numerical failure.

mod commands;
mod driver;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::frdn_check::{FrdnCheckArgs, FrdnCheckConfig};
use commands::hankel::{HankelArgs, HankelConfig};
use commands::sample::{SampleArgs, SampleConfig};
use commands::separation::{SeparationArgs, SeparationConfig};
use commands::validate_model::{ValidateModelArgs, ValidateModelConfig};
use commands::witness::{WitnessArgs, WitnessConfig};
use driver::{drive, Common};
use error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "quasireal", version, about = "Quasi-realizations, HQMMs and cone-stable process constructions")]
#[command(after_help = "Exit codes: 0 pass, 1 check failed, 2 invalid input or construction, 3 numerical failure.\n\
Settings are layered: defaults < --config file < command-line flags.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare the chain, 4-dim quasi and qutrit FRDN models on all short words.
    FrdnCheck {
        #[command(flatten)]
        args: FrdnCheckArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Verify the cone sandwich and map stability of a cone-stable process.
    Separation {
        #[command(flatten)]
        args: SeparationArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Spectral lower bounds on the dimension of non-negative realizations.
    Witness {
        #[command(flatten)]
        args: WitnessArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Hankel-block rank and spectral recovery of a regular realization.
    Hankel {
        #[command(flatten)]
        args: HankelArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a stationary sequence from a hidden quantum Markov model.
    Sample {
        #[command(flatten)]
        args: SampleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a model file defines a stationary probability measure.
    ValidateModel {
        #[command(flatten)]
        args: ValidateModelArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn dispatch(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::FrdnCheck { args, common } => {
            drive(&common, |c: &mut FrdnCheckConfig| c.apply(&args), commands::frdn_check::run)
        }
        Command::Separation { args, common } => {
            drive(&common, |c: &mut SeparationConfig| c.apply(&args), commands::separation::run)
        }
        Command::Witness { args, common } => drive(&common, |c: &mut WitnessConfig| c.apply(&args), commands::witness::run),
        Command::Hankel { args, common } => drive(&common, |c: &mut HankelConfig| c.apply(&args), commands::hankel::run),
        Command::Sample { args, common } => drive(&common, |c: &mut SampleConfig| c.apply(&args), commands::sample::run),
        Command::ValidateModel { args, common } => {
            drive(&common, |c: &mut ValidateModelConfig| c.apply(&args), commands::validate_model::run)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
