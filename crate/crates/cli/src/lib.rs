//! Command-line front-end for `decorr-core`.
//!
//! The binary is a thin wrapper around [`run`]; commands are also callable
//! directly for embedding and testing.

pub mod args;
pub mod commands;
pub mod config;
pub mod inputs;

use decorr_core::{DecorrError, Result};

pub use args::{Cli, Command};
pub use commands::Outcome;
pub use config::RunConfig;

fn configure_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        None => Ok(()),
        Some(0) => Err(DecorrError::Config("--threads must be at least 1".into())),
        // A second initialization in the same process keeps the first pool.
        Some(n) => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
            Ok(())
        }
    }
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<Outcome> {
    configure_threads(cli.global.threads)?;
    let config = RunConfig::from_args(&cli.global)?;
    let dry_run = cli.global.dry_run;
    let mut outcome = match &cli.command {
        Command::Plan => commands::cmd_plan(&config, dry_run),
        Command::Captions(args) => commands::cmd_captions(&config, args, dry_run),
        Command::Eval(args) => commands::cmd_eval(&config, args, dry_run),
        Command::Cooccur => commands::cmd_cooccur(&config, dry_run),
        Command::Sample(args) => commands::cmd_sample(&config, args, dry_run),
    }?;
    if dry_run {
        outcome
            .lines
            .insert(0, "dry run: nothing will be written".into());
    }
    Ok(outcome)
}
