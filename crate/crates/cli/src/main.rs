//! `qcd`: batch front end for solving detection policies and simulating
//! their false-alarm / delay curves. All logarithms are natural.

mod commands;
mod csvout;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Sink;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qcd", version, about = "Quickest change detection with limited sampling rights")]
struct Cli {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file, overriding run.out. Standard output otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed, overriding run.master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Prints the effective configuration with every default and exits.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solves the fixed-budget table for solver.rights and solver.cost.
    SolveLimited,
    /// Solves the replenished-rights table by value iteration.
    SolveStochastic,
    /// Simulates run.policy and writes the curve CSV.
    Simulate {
        /// Solved table for limited, limited-threshold or stochastic-optimal.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Prints the leading-order delay bounds for run.alphas.
    Bounds,
    /// Prints the greedy energy chain and its stationary law.
    Chain,
}

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut cfg = commands::load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.run.master_seed = seed;
    }
    if cli.print_config {
        let text = format!("{}\n", cfg.to_json_pretty());
        return std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e));
    }
    let explicit = cli.out.is_some() || cfg.run.out.is_some();
    let sink = Sink::from_config(cli.out, &cfg);
    match cli.command {
        None => Err(CliError::Usage("no subcommand given; see --help".into())),
        Some(Command::SolveLimited) => commands::solve_limited_cmd(&cfg, &sink),
        Some(Command::SolveStochastic) => commands::solve_stochastic_cmd(&cfg, &sink),
        Some(Command::Simulate { table }) => commands::simulate_cmd(&cfg, table.as_deref(), &sink),
        Some(Command::Bounds) => commands::bounds_cmd(&cfg, explicit.then_some(&sink)),
        Some(Command::Chain) => commands::chain_cmd(&cfg, explicit.then_some(&sink)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
