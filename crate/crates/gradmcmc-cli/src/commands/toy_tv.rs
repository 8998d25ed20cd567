//! Sampled convergence curves: empirical law vs. the enumerated target.
//!
//! Runs the three Metropolis-corrected kernels and the unadjusted
//! projection kernel from a fixed start (token 0 everywhere), one chain per
//! (seed, kernel) on independent RNG streams, and reports the total
//! variation between the running empirical distribution and the exact
//! target at each checkpoint. Step sizes are the conventional presets: 1.5
//! for the projection kernel, 1.0 for both gradient proposals. The
//! corrected kernels' curves decay toward 0; the projection kernel's curve
//! plateaus at its stationary law's distance from the target.
//!
//! Seeds run concurrently; rows are merged in seed order, so the CSV is a
//! pure function of (config, seeds).

use std::ops::ControlFlow;
use std::thread;

use gradmcmc::diagnostics::tv_curve;
use gradmcmc::energy::SequenceState;
use gradmcmc::exact::{exact_target, DistributionVector, StateSpace};
use gradmcmc::samplers::{
    run_chain, GwlConfig, GwlKernel, MucolaConfig, MucolaKernel, PncgConfig, PncgKernel,
    RwmKernel, ScanOrder,
};

use crate::commands::{enumerate, run_rng, AnyKernel, Invocation};
use crate::config::{default_checkpoints, ExperimentConfig, ModelSpec};
use crate::error::{classify, CliError};
use crate::output::{csv_header, fmt_f64, OutputDir};

/// The fixed protocol: kernel label and its RNG stream slot.
const TOY_RUNS: [&str; 4] = ["pncg", "gwl", "rwm", "mucola"];

/// Runs the command; returns the artifact paths written.
pub fn run(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<String>, CliError> {
    let model = cfg.model.build()?;
    let space = enumerate(&model, inv.cap)?;
    let target = exact_target(&model, &space).map_err(classify)?;
    let steps = cfg.tv_steps();
    let checkpoints = match &cfg.checkpoints {
        Some(c) => c.clone(),
        None => default_checkpoints(steps),
    };
    if checkpoints.last().is_some_and(|&last| last > steps) {
        return Err(CliError::Config(format!(
            "checkpoints: last checkpoint {} exceeds the {steps} steps to run",
            checkpoints.last().unwrap()
        )));
    }

    let fragments: Vec<Result<String, CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = inv
            .seeds
            .iter()
            .map(|&seed| {
                let (space, target, checkpoints) = (&space, &target, &checkpoints);
                let model_spec = &cfg.model;
                scope.spawn(move || {
                    seed_rows(model_spec, space, target, checkpoints, steps, seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });

    let mut csv = csv_header("toy-tv");
    csv.push_str("kernel,seed,step,tv\n");
    for fragment in fragments {
        csv.push_str(&fragment?);
    }

    let mut out = OutputDir::create(&inv.out)?;
    let path = out.write_atomic("toy_tv.csv", csv.as_bytes())?;
    Ok(vec![path.display().to_string()])
}

/// All rows for one seed: the four kernels in protocol order.
fn seed_rows(
    model_spec: &ModelSpec,
    space: &StateSpace,
    target: &DistributionVector,
    checkpoints: &[usize],
    steps: usize,
    seed: u64,
) -> Result<String, CliError> {
    let mut rows = String::new();
    for (stream, &name) in TOY_RUNS.iter().enumerate() {
        let mut kernel = build_toy_kernel(name, model_spec)?;
        let mut rng = run_rng(seed, stream as u64);
        let initial = SequenceState::new(space.table(), vec![0; space.positions()])
            .map_err(classify)?;
        let trace = run_chain(&mut kernel, initial, steps, &mut rng, |_, _, _| {
            ControlFlow::Continue(())
        });
        for (step, tv) in tv_curve(&trace, space, target, checkpoints).map_err(classify)? {
            rows.push_str(&format!("{name},{seed},{step},{}\n", fmt_f64(tv)));
        }
    }
    Ok(rows)
}

/// One protocol kernel with its preset step size, over a fresh model.
fn build_toy_kernel(name: &str, model_spec: &ModelSpec) -> Result<AnyKernel, CliError> {
    let model = model_spec.build()?;
    Ok(match name {
        "pncg" => AnyKernel::Pncg(PncgKernel::new(model, PncgConfig::default()).map_err(classify)?),
        "gwl" => {
            let cfg = GwlConfig::new(1.0, 2.0, ScanOrder::Random).map_err(classify)?;
            AnyKernel::Gwl(GwlKernel::new(model, cfg).map_err(classify)?)
        }
        "rwm" => AnyKernel::Rwm(RwmKernel::new(model)),
        "mucola" => {
            AnyKernel::Mucola(MucolaKernel::new(model, MucolaConfig::default()).map_err(classify)?)
        }
        other => unreachable!("unknown protocol kernel {other}"),
    })
}
