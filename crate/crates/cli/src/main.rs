use std::process::ExitCode;

use clap::Parser;
use errmap_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("errmap: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
