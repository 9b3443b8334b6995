use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use evid_cli::runner::{exit, run, RunConfig};

/// Maximum-likelihood reasoning over propositional evidence.
#[derive(Parser)]
#[command(name = "evid", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an evidence file and answer its queries.
    Solve {
        /// Evidence file (prop/obs/axiom/bound/query statements).
        file: PathBuf,
        /// Emit the report as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Relative stationarity tolerance for convergence.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Iteration budget for the solver.
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
        /// Dither the solver's start point (omit for a deterministic run).
        #[arg(long)]
        seed: Option<u64>,
        /// Include the maximum-likelihood joint distribution in the report.
        #[arg(long)]
        dump_jdv: bool,
        /// Include a basis of the maximizer set's direction space.
        #[arg(long)]
        dump_nullspace: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(exit::OK);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(exit::USAGE);
        }
    };
    let Command::Solve { file, json, tolerance, max_iter, seed, dump_jdv, dump_nullspace } =
        cli.command;
    let mut cfg = RunConfig::new(file);
    cfg.json = json;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iter;
    cfg.seed = seed;
    cfg.dump_jdv = dump_jdv;
    cfg.dump_nullspace = dump_nullspace;
    let code = run(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
