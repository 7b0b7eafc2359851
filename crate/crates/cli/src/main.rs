use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cdfsort_cli::Cli::parse();
    match cdfsort_cli::execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
