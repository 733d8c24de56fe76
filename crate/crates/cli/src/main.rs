mod args;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use qsearch_core::par::Parallelism;

use args::{Cli, Command};
use settings::{pick, resolve_out_dir, FileConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: qsearch_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: qsearch_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output(_) | CliError::Runtime(_) => 3,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let out = resolve_out_dir(cli.out_dir.clone(), &file);
    let sequential = cli.sequential || pick(None, &file.sequential, false);
    let par = if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    match &cli.command {
        Command::SingleRun(a) => commands::single_run(a, &file, &out, par),
        Command::SweepNoise(a) => {
            commands::sweep("sweep-noise", a, &file, &out, par, "0:3:1", "0,1")
        }
        Command::SweepR(a) => commands::sweep("sweep-r", a, &file, &out, par, "0", "0:5:0.25"),
        Command::Scaling(a) => commands::scaling(a, &file, &out, par),
        Command::Selftest => commands::run_selftest(par),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsearch: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
