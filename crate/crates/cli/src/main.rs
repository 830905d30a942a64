mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::{config_err, CliResult, EXIT_CONFIG};

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_err("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_err(format!("thread pool: {e}")))?;
    }
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Transition(a) => commands::transition(a, file),
        Command::Concentration(a) => commands::concentration(a, file),
        Command::Generate(a) => commands::generate(a, file),
        Command::Analyze(a) => commands::analyze(a, file),
        Command::Validate(a) => commands::validate(a, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noiseforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
