use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use furstenberg::par::with_workers;
use furstenberg_cli::args::Cli;
use furstenberg_cli::{dispatch, error_document, write_outputs};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are engineering failures; 2 is reserved for checks
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = with_workers(cli.workers, || dispatch(&cli));
    let result = outcome.and_then(|out| {
        if let Some(dir) = &cli.out {
            write_outputs(dir, &out)?;
        }
        std::io::stdout().lock().write_all(out.text.as_bytes())?;
        Ok(out.check_failed)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", error_document(&e));
            ExitCode::from(1)
        }
    }
}
