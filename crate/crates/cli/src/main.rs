//! `ves`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a check failed (or a
//! reduction was refused), 3 numerical failure (Newton, ellipticity,
//! singular chart).

// `!(a > b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

use args::{Cli, Command};
use commands::{Context, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = Context::new(&cli.global).and_then(|ctx| match &cli.command {
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Diagnose(a) => commands::diagnose(&ctx, a),
        Command::Uniformize(a) => commands::uniformize(&ctx, a),
        Command::Invert(a) => commands::invert(&ctx, a),
        Command::Burgers(a) => commands::burgers(&ctx, a),
        Command::Reduce(a) => commands::reduce_cmd(&ctx, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
