//! The `procstory` command line: configuration, exit codes and the command implementations.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod log;
pub mod setup;

pub use args::Cli;
pub use config::RunConfig;
pub use error::{CliError, Result};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        args::Command::Train(a) => commands::train::run(a),
        args::Command::Label(a) => commands::label::run(a),
        args::Command::Augment(a) => commands::augment::run(a),
        args::Command::Evaluate(a) => commands::evaluate::run(a),
        args::Command::ExtractParticipants(a) => commands::extract::run(a),
    }
}
