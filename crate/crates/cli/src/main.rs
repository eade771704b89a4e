use std::process::ExitCode;

use clap::Parser;

use decisive_cli::{json_flag, render, run, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((report, code)) => {
            print!("{}", render(&report, json_flag(&cli.command)));
            ExitCode::from(code as u8)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
