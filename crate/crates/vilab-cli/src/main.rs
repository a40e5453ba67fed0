//! `vilab`: obstacle-problem laboratory front end.
//!
//! Subcommands: `solve` one variational inequality, `check` the inequality
//! batteries, `optimize` the distributed control, `sweep` the h-limit
//! studies, `report` for the whole battery. Exit codes: 0 success,
//! 1 usage/config error, 2 solver or check failure, 3 optimizer failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{Effective, Overrides, SweepKind};
use std::path::PathBuf;
use vilab::error::Error;

#[derive(Parser)]
#[command(
    name = "vilab",
    version,
    about = "Obstacle-problem laboratory: solvers, estimate checks, distributed control, h-limit sweeps"
)]
struct Cli {
    /// TOML config file; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for check batteries
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base seed for sampled instances
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Boundary mode: dirichlet | robin
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Heat-transfer coefficient for robin mode
    #[arg(long = "h", global = true)]
    h: Option<f64>,
    /// Comma-separated h values for sweeps
    #[arg(long = "h-list", global = true)]
    h_list: Option<String>,
    /// Regularization weight of the control cost
    #[arg(long = "M", global = true)]
    m_weight: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one variational inequality and dump the solution
    Solve {
        /// Also dump the assembled matrices in coordinate text form
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run inequality check batteries (default: all)
    Check {
        /// Battery names (theorem1, monotone_g, sandwich, h_bounds,
        /// lemma_l3, mignot, continuity, convexity)
        names: Vec<String>,
    },
    /// Minimize the control cost for the configured mode
    Optimize,
    /// Sweep the heat-transfer coefficient toward the Dirichlet limit
    Sweep {
        /// state | control (overrides the config)
        #[arg(long)]
        kind: Option<String>,
    },
    /// Run every battery and both sweeps, then summarize
    Report,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Infeasible(_) | Error::Io(_) => 1,
        Error::SolverFailure(_) | Error::Numerical(_) => 2,
        Error::OptimizerFailure(_) => 3,
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    let overrides = Overrides {
        out: cli.out,
        jobs: cli.jobs,
        seed: cli.seed,
        mode: cli.mode,
        h: cli.h,
        h_list: cli.h_list,
        m_weight: cli.m_weight,
    };
    let eff = Effective::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Solve { dump_matrices } => commands::run_solve(&eff, dump_matrices),
        Command::Check { names } => commands::run_check(&eff, &names),
        Command::Optimize => commands::run_optimize(&eff),
        Command::Sweep { kind } => {
            let kind = match kind.as_deref() {
                None => None,
                Some("state") => Some(SweepKind::State),
                Some("control") => Some(SweepKind::Control),
                Some(other) => {
                    return Err(Error::Config(format!(
                        "unknown sweep kind '{other}' (expected state|control)"
                    )))
                }
            };
            commands::run_sweep(&eff, kind)
        }
        Command::Report => commands::run_report(&eff),
    }
}

fn main() {
    // die quietly when a downstream pipe closes, as Unix tools do
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
