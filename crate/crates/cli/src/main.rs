use clap::Parser;
use qfi_bandlimit_cli::cli::Cli;
use qfi_bandlimit_cli::commands::run;
use qfi_bandlimit_cli::UsageError;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    match run(&cli.command, &arguments) {
        Ok(outcome) if outcome.unconverged > 0 => {
            eprintln!(
                "warning: {} of {} rows failed their convergence check",
                outcome.unconverged, outcome.rows
            );
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}
