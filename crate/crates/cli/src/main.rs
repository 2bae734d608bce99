use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = canonstat_cli::Cli::parse();
    match canonstat_cli::run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code.clamp(1, 255) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
