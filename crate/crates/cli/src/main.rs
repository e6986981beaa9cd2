use std::process::ExitCode;

use clap::Parser;
use fermi_lab_cli::{main_with, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::Config(e.kind().to_string());
            eprintln!("{}", err.error_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match main_with(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.error_line());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
