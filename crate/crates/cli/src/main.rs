use std::process::ExitCode;

use clap::Parser;
use crb_cli::{execute, Cli, EXIT_VIOLATES};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            print!("{}", out.report.render(out.format));
            if out.violates {
                eprintln!("crb: empirical MSE falls below the bound");
                ExitCode::from(EXIT_VIOLATES)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("crb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
