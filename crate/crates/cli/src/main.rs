//! `rac`: cluster, verify, generate instances and run the round-count
//! simulations.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 internal assertion,
//! 3 verification mismatch. `RAC_LOG` sets the log level.

mod cluster;
mod input;
mod output;
mod sim;
mod synth;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rac",
    version,
    about = "Exact hierarchical clustering by reciprocal nearest-neighbor rounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a graph and write the dendrogram and per-round stats.
    Cluster(cluster::Args),
    /// Check that RAC and sequential HAC produce the same merges.
    Verify(verify::Args),
    /// Generate instances.
    #[command(subcommand)]
    Synth(synth::Command),
    /// Run the round-count models.
    #[command(subcommand)]
    Sim(sim::Command),
}

/// A failed command: message and exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn usage(message: impl Into<String>) -> Self {
        Exit {
            code: 1,
            message: message.into(),
        }
    }

    pub fn assertion(message: impl Into<String>) -> Self {
        Exit {
            code: 2,
            message: message.into(),
        }
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Exit {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<rac::Error> for Exit {
    fn from(e: rac::Error) -> Self {
        let code = match e {
            rac::Error::Consistency(_) => 2,
            _ => 1,
        };
        Exit {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult = Result<(), Exit>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RAC_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Cluster(args) => cluster::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Synth(cmd) => synth::run(&cmd),
        Command::Sim(cmd) => sim::run(&cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(exit) => {
            eprintln!("rac: {}", exit.message);
            ExitCode::from(exit.code)
        }
    }
}
