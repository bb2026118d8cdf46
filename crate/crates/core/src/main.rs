use std::process::ExitCode;

use clap::Parser;
use sparareal::cli::{run, Cli};

fn main() -> ExitCode {
    run(&Cli::parse())
}
