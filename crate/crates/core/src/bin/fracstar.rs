use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fracstar::cli::{execute, Args, RunConfig, EXIT_INVALID};

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match RunConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let outcome = execute(&config);
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
