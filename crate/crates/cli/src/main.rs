//! `scalecalc`: calculus at scale h on finite metric measure spaces.
//!
//! Exit codes: 0 when every asserted invariant holds, 1 when one fails
//! (witnesses are written next to the artifacts), 2 on invalid input.

mod commands;
mod config;
mod error;
mod ops;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;

#[derive(Parser)]
#[command(name = "scalecalc", version, about = "Calculus at scale h on finite metric measure spaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Global {
    /// Seed for every random component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (single-result commands) or directory (reports, `run`, `accept`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON object overriding named tolerances.
    #[arg(long = "tol-overrides", global = true)]
    pub tol_overrides: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate spaces.
    #[command(subcommand)]
    Zoo(commands::ZooCmd),
    /// Build a kernel file: `standard`, `lazy`, `srw` or `identity`.
    Viewpoint(commands::ViewpointArgs),
    /// Gradients, Laplacians, energies and the co-area sandwich of a field.
    #[command(subcommand)]
    Calc(commands::CalcCmd),
    /// Isoperimetric and boundary profiles, Cheeger constants, Sobolev checks.
    #[command(subcommand)]
    Profile(commands::ProfileCmd),
    /// Return probabilities, γ-transforms and Dirichlet spectral radii.
    #[command(subcommand)]
    Walk(commands::WalkCmd),
    /// Discretization and large-scale-equivalence certificates.
    #[command(subcommand)]
    Coarse(commands::CoarseCmd),
    /// Run the acceptance criteria and emit them as a JSON table.
    Accept(commands::AcceptArgs),
    /// Run an experiment config.
    Run(commands::RunArgs),
}

fn dispatch(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Zoo(c) => commands::zoo(c, g),
        Command::Viewpoint(a) => commands::viewpoint(a, g),
        Command::Calc(c) => commands::calc(c, g),
        Command::Profile(c) => commands::profile(c, g),
        Command::Walk(c) => commands::walk(c, g),
        Command::Coarse(c) => commands::coarse(c, g),
        Command::Accept(a) => commands::accept(a, g),
        Command::Run(a) => commands::run_config(a, g),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
