//! `dvqe solve` and `dvqe sweep`.
//!
//! Exit status: 0 when every level converged, 2 when some did not, 1 on
//! configuration, input or I/O errors.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Mode, RunConfig};
pub use error::CliError;

#[derive(Parser)]
#[command(
    name = "dvqe",
    version,
    about = "Ground and excited states of Pauli-sum Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the lowest levels of one Hamiltonian.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Pauli-sum file, one `coefficient WORD` term per line.
        #[arg(long)]
        hamiltonian: PathBuf,
        /// Number of levels, ground state included.
        #[arg(long)]
        levels: usize,
    },
    /// Solve every bond distance of a sweep plan.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON plan listing distances, Hamiltonian files, anchor and levels.
        #[arg(long)]
        plan: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            config.out_dir = dir.clone();
        }
        if let Some(mode) = self.mode {
            config.override_mode(mode);
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Solve {
            common,
            hamiltonian,
            levels,
        } => commands::solve(&common.load()?, &hamiltonian, levels),
        Command::Sweep { common, plan } => commands::sweep(&common.load()?, &plan),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
