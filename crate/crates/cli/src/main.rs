//! `mqpf` command-line front end.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 timed out,
//! 4 infeasible up to the depth cap, 5 oracle mismatch.

mod bench;
mod check;
mod common;
mod solve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TIMED_OUT: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;
pub const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(name = "mqpf", version, about = "Depth-optimal, error-aware multi-qubit routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route one instance and write the schedule.
    Solve(solve::SolveArgs),
    /// Sweep random instances and emit one CSV row per solve.
    Bench(bench::BenchArgs),
    /// Compare the router against brute force on random tiny instances.
    OracleCheck(check::CheckArgs),
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_USAGE, error: error.into() }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_RUNTIME, error: error.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Bench(args) => bench::run(args),
        Command::OracleCheck(args) => check::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
