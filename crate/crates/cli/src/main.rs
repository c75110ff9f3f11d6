mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use log::error;

use args::{Cli, Command};

/// A bad flag combination or argument caught by the CLI itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// 1 for mistakes in the caller's input, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<bitext_curation::CurationError>() {
            return if e.is_user_error() { 1 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<bitext_core::Error>() {
            return if e.is_user_error() { 1 } else { 2 };
        }
        if cause.is::<UsageError>() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "warn"
    } else {
        "info"
    }))
    .target(env_logger::Target::Stderr)
    .init();

    let result = match cli.command {
        Command::Dedup(a) => commands::dedup(a),
        Command::Score(a) => commands::score(a),
        Command::Filter(a) => commands::filter(a),
        Command::Run(a) => commands::run(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sample(a) => commands::sample(a),
        Command::Serve(a) => commands::serve(a),
        Command::ExportGold(a) => commands::export_gold(a),
        Command::Report(a) => commands::report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
