//! `nisd`: run detection, decomposition and D_α checks from JSON problem files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nisd_cli::spec::Overrides;
use nisd_cli::{report, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "nisd", version, about = "Nearly T⁻¹-invariant subspaces with finite defect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wandering part, minimal defect space and the near-invariance check.
    Detect(RunArgs),
    /// Detection followed by the transfer to backward-shift invariant K.
    Decompose(RunArgs),
    /// Decomposition in D_α for a Blaschke operator.
    Dalpha(RunArgs),
    /// Wold layers of each generator with respect to the Blaschke operator.
    Wold(RunArgs),
    /// Lower-bound constants for multiplication by B in D_α.
    Gamma(RunArgs),
}

#[derive(clap::Args, Clone, Debug)]
struct RunArgs {
    /// Problem description (JSON).
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Report destination; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Override the truncation budget N.
    #[arg(long)]
    budget: Option<usize>,
    /// Override the check and leakage tolerances.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Leave timings out so that reports are byte-for-byte reproducible.
    #[arg(long)]
    no_timings: bool,
    /// Also write coefficient tables as CSV files into this directory.
    #[arg(long, value_name = "DIR")]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Detect(a) => ("detect", a),
        Command::Decompose(a) => ("decompose", a),
        Command::Dalpha(a) => ("dalpha", a),
        Command::Wold(a) => ("wold", a),
        Command::Gamma(a) => ("gamma", a),
    };
    let opts = RunOptions {
        overrides: Overrides { budget: args.budget, tol: args.tol, seed: args.seed },
        timings: !args.no_timings,
        csv: args.csv.clone(),
    };
    let result = run_file(name, &args.spec, &opts).and_then(|json| report::write(args.out.as_deref(), &json));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nisd {name}: {e}");
            // best effort: leave a machine-readable failure record behind
            if let Some(out) = &args.out {
                let _ = report::write(Some(out), &report::failure(name, &e));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
