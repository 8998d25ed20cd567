//! `gradmcmc`: reproducible experiments with gradient-informed MCMC over
//! embedded token sequences.
//!
//! Four subcommands cover the toy-model workflow end to end:
//!
//! - `toy-limit` — exact long-run law of each kernel vs. the target, across
//!   a step-size grid (CSV; no sampling).
//! - `toy-tv`   — sampled total-variation convergence curves for the three
//!   Metropolis-corrected kernels and the unadjusted projection kernel (CSV).
//! - `mixing`   — exact mixing times, the closed-form lower bound, spectral
//!   gaps, and Gershgorin disc checks (JSON).
//! - `chain`    — free-form runs of any configured kernel: one JSONL trace
//!   per seed plus a summary CSV.
//!
//! Every subcommand is a pure function of (config, seeds) to output bytes.
//! Exit codes: 0 on success, 2 for configuration errors, 3 when the request
//! is infeasible (no closed form, enumeration cap exceeded), 1 otherwise.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, preset_config, ExperimentConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "gradmcmc",
    version,
    about = "Gradient-informed MCMC over embedded token sequences: exact \
             toy-model analysis and reproducible chain experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact stationary laws across step sizes, compared to the target (CSV)
    ToyLimit(RunArgs),
    /// Sampled total-variation convergence curves for the four kernels (CSV)
    ToyTv(RunArgs),
    /// Mixing times, lower bounds, spectra, and disc checks (JSON)
    Mixing(RunArgs),
    /// Free-form chain runs: JSONL trace per seed plus a summary CSV
    Chain(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; defaults to the built-in five-site cycle preset
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed to run; repeat the flag for several (overrides the config's seeds)
    #[arg(long = "seed", value_name = "INT")]
    seeds: Vec<u64>,

    /// Directory artifacts are written to (default: out)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Include the full token state in every JSONL trace record
    #[arg(long)]
    emit_states: bool,

    /// Cap on exact state enumeration (default: 1000000)
    #[arg(long, value_name = "INT")]
    cap: Option<u128>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {p}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<Vec<String>, CliError> {
    let (args, run): (&RunArgs, _) = match &cli.cmd {
        Cmd::ToyLimit(a) => (a, commands::toy_limit::run as CommandFn),
        Cmd::ToyTv(a) => (a, commands::toy_tv::run as CommandFn),
        Cmd::Mixing(a) => (a, commands::mixing::run as CommandFn),
        Cmd::Chain(a) => (a, commands::chain::run as CommandFn),
    };
    let cfg = load_config(args)?;
    let inv = commands::resolve_invocation(
        &cfg,
        &args.seeds,
        args.out.as_ref(),
        args.cap,
        args.emit_states,
    )?;
    run(&cfg, &inv)
}

type CommandFn = fn(&ExperimentConfig, &commands::Invocation) -> Result<Vec<String>, CliError>;

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text, &path.display().to_string())
        }
        None => Ok(preset_config()),
    }
}
