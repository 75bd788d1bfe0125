//! Command-line front end for the randepth library.
//!
//! Exit codes: 0 on success, 1 when a selftest check fails, 2 on usage or
//! IO errors (clap's own usage failures also exit 2).

mod args;
mod experiments;
mod fit;
mod gen;
mod manifest;
mod models;
mod predict;
mod selftest;

use clap::Parser;

use args::{Cli, Command};

enum Outcome {
    Success,
    ChecksFailed,
}

fn run(cli: &Cli) -> randepth::Result<Outcome> {
    match &cli.command {
        Command::Gen(a) => gen::run(a)?,
        Command::Fit(a) => fit::run(a)?,
        Command::Predict(a) => predict::run(a)?,
        Command::Exp1(a) => experiments::run_exp1(a)?,
        Command::Exp2(a) => experiments::run_exp2(a)?,
        Command::Selftest(a) => {
            if !selftest::run(a)? {
                return Ok(Outcome::ChecksFailed);
            }
        }
    }
    Ok(Outcome::Success)
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => {}
        Ok(Outcome::ChecksFailed) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(2);
        }
    }
}
