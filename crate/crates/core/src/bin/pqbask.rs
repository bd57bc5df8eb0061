use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use pq_baskakov::cli::{exit_code, run, Cli, EXIT_IO};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli.command) {
        Ok(outcome) => outcome,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(exit_code(&err));
        }
    };
    let text = outcome.table.render(outcome.format);
    let written = match &outcome.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(err) = written {
        eprintln!("error: cannot write output: {err}");
        return ExitCode::from(EXIT_IO);
    }
    if outcome.exit != 0 {
        eprintln!("error: series did not converge within --kmax terms; partial result printed");
    }
    ExitCode::from(outcome.exit)
}
