use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ermakov_cli::Cli::parse();
    ExitCode::from(ermakov_cli::run(cli))
}
