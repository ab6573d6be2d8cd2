use std::process::ExitCode;

use clap::Parser;
use eigencorpus_cli::cli::{execute, Cli};
use eigencorpus_cli::exit_code;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
