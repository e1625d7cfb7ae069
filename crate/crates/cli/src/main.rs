mod args;
mod commands;
mod reproduce;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Format};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(report) => {
            match cli.global.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Structured => print!("{}", report.to_structured()),
            }
            let ok = report.status.is_success() && report.grid_verdict != "refuted";
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
