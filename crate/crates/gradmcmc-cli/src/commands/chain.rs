//! Free-form chain runs: a JSONL trace per seed and one summary CSV.
//!
//! Works with any configured model and kernel, enumerable or not — nothing
//! here builds a state space, so a 25-position chain runs as readily as the
//! five-position toy, producing an energy trace instead of exact analysis.
//! Each trace record holds the step index, the energy after the step,
//! whether the proposal was taken, and how many positions changed;
//! `--emit-states` adds the full token sequence. The summary row per seed
//! carries the post-burn-in energy mean with its batch-means standard
//! error, the acceptance rate, and — for the two-phase kernel — the step at
//! which it switched to its single-position phase.
//!
//! Seeds run concurrently. Traces stream to scratch files that are renamed
//! into place in seed order; if any write fails, the artifacts already
//! finalized are flagged as partial outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use gradmcmc::diagnostics::{default_burn_in, energy_summary, EnergySummary};
use gradmcmc::samplers::run_chain;

use crate::commands::{initial_state, run_rng, AnyKernel, Invocation};
use crate::config::ExperimentConfig;
use crate::error::{classify, CliError};
use crate::output::{csv_header, fmt_f64, OutputDir};

/// One line of the JSONL trace.
#[derive(Serialize)]
struct TraceRecord<'a> {
    /// Step index; 0 is the initial state before any transition.
    t: usize,
    /// Energy of the chain state after the step.
    energy: f64,
    /// Whether the proposal was taken (the initial state counts as taken).
    accepted: bool,
    /// Positions actually changed by the step; 0 on rejection.
    changes: usize,
    /// Token indices of the state, present only with `--emit-states`.
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<&'a [usize]>,
}

/// Everything one seed's run contributes to the merged summary.
struct SeedOutcome {
    seed: u64,
    file_name: String,
    scratch: PathBuf,
    summary: EnergySummary,
    acceptance_rate: f64,
    switch_step: Option<usize>,
}

/// Runs the command; returns the artifact paths written.
pub fn run(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<String>, CliError> {
    let steps = cfg.chain_steps();
    let burn_in = cfg.burn_in.unwrap_or_else(|| default_burn_in(steps + 1));
    let kernel_name = cfg.kernel.name.as_str();
    let mut out = OutputDir::create(&inv.out)?;

    let outcomes: Vec<Result<SeedOutcome, CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = inv
            .seeds
            .iter()
            .map(|&seed| {
                let dir = out.dir().to_owned();
                scope.spawn(move || {
                    run_seed(cfg, &dir, kernel_name, seed, steps, burn_in, inv.emit_states)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });

    // Publish traces in seed order; abandon cleanly on the first failure.
    let mut published = Vec::new();
    let mut finished = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(o) => finished.push(o),
            Err(e) => {
                for o in &finished {
                    let _ = fs::remove_file(&o.scratch);
                }
                return Err(flag_partial(e, &out));
            }
        }
    }
    for o in &finished {
        let path = out
            .publish(&o.scratch, &o.file_name)
            .map_err(|e| abandon_scratches(&finished, e))?;
        published.push(path.display().to_string());
    }

    let mut csv = csv_header("chain-summary");
    csv.push_str(
        "kernel,seed,steps,burn_in,mean_energy,energy_se,acceptance_rate,switch_step\n",
    );
    for o in &finished {
        let switch = o
            .switch_step
            .map(|s| s.to_string())
            .unwrap_or_default();
        csv.push_str(&format!(
            "{kernel_name},{},{steps},{burn_in},{},{},{},{switch}\n",
            o.seed,
            fmt_f64(o.summary.mean),
            fmt_f64(o.summary.standard_error),
            fmt_f64(o.acceptance_rate),
        ));
    }
    let summary_path = out.write_atomic("chain_summary.csv", csv.as_bytes())?;
    published.push(summary_path.display().to_string());
    Ok(published)
}

/// Simulates one seed, streaming its trace to a scratch file.
fn run_seed(
    cfg: &ExperimentConfig,
    dir: &Path,
    kernel_name: &str,
    seed: u64,
    steps: usize,
    burn_in: usize,
    emit_states: bool,
) -> Result<SeedOutcome, CliError> {
    let mut kernel = AnyKernel::build(&cfg.kernel, &cfg.model)?;
    let model = cfg.model.build()?;
    let initial = initial_state(&model)?;
    let mut rng = run_rng(seed, 0);

    let file_name = format!("chain_{kernel_name}_seed{seed}.jsonl");
    let scratch = dir.join(format!(".{file_name}.tmp"));
    let file = File::create(&scratch)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", scratch.display())))?;
    let mut writer = BufWriter::new(file);

    let mut write_error = None;
    let trace = run_chain(&mut kernel, initial, steps, &mut rng, |t, record, state| {
        let line = TraceRecord {
            t,
            energy: record.energy,
            accepted: record.accepted,
            changes: record.actual_changes(),
            state: emit_states.then(|| state.tokens()),
        };
        let written = serde_json::to_string(&line)
            .map_err(std::io::Error::other)
            .and_then(|json| writeln!(writer, "{json}"));
        match written {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                write_error = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    let flushed = writer.flush();
    if let Some(e) = write_error {
        let _ = fs::remove_file(&scratch);
        return Err(CliError::Runtime(format!(
            "writing {}: {e}",
            scratch.display()
        )));
    }
    flushed.map_err(|e| {
        let _ = fs::remove_file(&scratch);
        CliError::Runtime(format!("writing {}: {e}", scratch.display()))
    })?;

    let summary = energy_summary(&trace, burn_in).map_err(classify)?;
    Ok(SeedOutcome {
        seed,
        file_name,
        scratch,
        summary,
        acceptance_rate: trace.acceptance_rate(),
        switch_step: kernel.switch_step(),
    })
}

/// Adds the partial-outputs note to runtime failures; config mistakes pass
/// through untouched.
fn flag_partial(e: CliError, out: &OutputDir) -> CliError {
    match e {
        CliError::Runtime(msg) => out.io_failure("chain run aborted", msg),
        other => other,
    }
}

fn abandon_scratches(finished: &[SeedOutcome], e: CliError) -> CliError {
    for o in finished {
        let _ = fs::remove_file(&o.scratch);
    }
    e
}
