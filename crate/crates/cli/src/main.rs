#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, ConfigError, FileConfig, RunSpec};

/// Exit status for invalid flags, config files or values.
const EXIT_CONFIG: u8 = 2;
/// Exit status when a run could not be completed.
const EXIT_RUN: u8 = 1;

fn spec_from(cli: &Cli) -> Result<RunSpec, ConfigError> {
    let file = match &cli.opts.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    RunSpec::resolve(cli.command, &cli.opts, &file)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match spec_from(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(spec.jobs).build_global() {
        eprintln!("error: cannot start {} workers: {e}", spec.jobs);
        return ExitCode::from(EXIT_RUN);
    }
    match commands::execute(&spec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUN)
        }
    }
}
