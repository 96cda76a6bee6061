use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nambukit::{parse, run, RunOptions};

#[derive(Parser)]
#[command(name = "nambukit", version, about = "Run Nambu-Poisson session files")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and execute a session file.
    Run {
        file: PathBuf,
        /// Seed for the random-point oracle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
        /// Worker threads for parallel checks.
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
        /// Include per-command wall-clock times.
        #[arg(long)]
        timing: bool,
    },
}

fn main() -> ExitCode {
    let Cmd::Run { file, seed, json, jobs, timing } = Cli::parse().command;
    if let Some(k) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.into()).build_global() {
            eprintln!("nambukit: {e}");
            return ExitCode::from(2);
        }
    }
    let src = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("nambukit: cannot read {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let session = match parse(&src) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let report = run(&session, &RunOptions { seed, timing });
    if json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
