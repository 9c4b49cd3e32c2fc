use std::process::ExitCode;

use clap::Parser;
use fpcs_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FPCS_LAB_LOG", "warn")).init();
    run(&Cli::parse())
}
