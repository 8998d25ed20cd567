//! Subcommand implementations and the plumbing they share.
//!
//! Each command is a pure function of (config, seeds) to output bytes: all
//! randomness flows from the per-seed ChaCha streams, floats are printed in
//! shortest-roundtrip form, and rows are merged in seed order, so rerunning
//! an invocation reproduces its artifacts byte for byte.

pub mod chain;
pub mod mixing;
pub mod toy_limit;
pub mod toy_tv;

use std::path::PathBuf;

use gradmcmc::energy::{EnergyModel, SequenceState};
use gradmcmc::exact::{enumerate_states, StateSpace};
use gradmcmc::samplers::{
    ChainKernel, GwlConfig, GwlKernel, HybridKernel, MucolaConfig, MucolaKernel, PncgConfig,
    PncgKernel, RwmKernel, StepRecord,
};
use gradmcmc::RngCore;

use crate::config::{ExperimentConfig, KernelName, KernelSpec, ModelSpec};
use crate::error::{classify, CliError};

/// Flag-resolved run parameters shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Invocation {
    /// Seeds in the order their outputs are merged.
    pub seeds: Vec<u64>,
    /// Directory artifacts are written to.
    pub out: PathBuf,
    /// State-enumeration cap for exact analysis.
    pub cap: u128,
    /// Whether chain traces include full token states.
    pub emit_states: bool,
}

/// Models are built per use (and per thread) from their spec; the trait
/// object keeps one code path for plain and composite energies.
pub type Model = Box<dyn EnergyModel>;

/// Any of the five runnable kernels, dispatched by config.
///
/// All Metropolis-corrected kernels target the model's own law; the
/// projection kernel is unadjusted by definition and targets whatever its
/// projected Langevin dynamics converge to.
pub enum AnyKernel {
    Pncg(PncgKernel<Model>),
    Gwl(GwlKernel<Model>),
    Rwm(RwmKernel<Model>),
    Mucola(MucolaKernel<Model>),
    Hybrid(HybridKernel<Model>),
}

impl AnyKernel {
    /// Builds the configured kernel, constructing the model from its spec.
    pub fn build(spec: &KernelSpec, model: &ModelSpec) -> Result<Self, CliError> {
        let pncg_cfg = PncgConfig::new(spec.step_size, spec.norm_exponent).map_err(classify)?;
        let gwl_cfg =
            GwlConfig::new(spec.step_size, spec.norm_exponent, spec.scan).map_err(classify)?;
        Ok(match spec.name {
            KernelName::Pncg => {
                AnyKernel::Pncg(PncgKernel::new(model.build()?, pncg_cfg).map_err(classify)?)
            }
            KernelName::Gwl => {
                AnyKernel::Gwl(GwlKernel::new(model.build()?, gwl_cfg).map_err(classify)?)
            }
            KernelName::Rwm => AnyKernel::Rwm(RwmKernel::new(model.build()?)),
            KernelName::Mucola => {
                let cfg = MucolaConfig::new(spec.step_size).map_err(classify)?;
                AnyKernel::Mucola(MucolaKernel::new(model.build()?, cfg).map_err(classify)?)
            }
            KernelName::Hybrid => {
                let first = PncgKernel::new(model.build()?, pncg_cfg).map_err(classify)?;
                let second = GwlKernel::new(model.build()?, gwl_cfg).map_err(classify)?;
                AnyKernel::Hybrid(
                    HybridKernel::new(first, second, spec.hybrid).map_err(classify)?,
                )
            }
        })
    }

    /// Step (1-based) after which the two-phase kernel switched to its
    /// single-position phase; `None` for other kernels or before switching.
    pub fn switch_step(&self) -> Option<usize> {
        match self {
            AnyKernel::Hybrid(k) => k.switch_step(),
            _ => None,
        }
    }
}

impl ChainKernel for AnyKernel {
    fn name(&self) -> &'static str {
        match self {
            AnyKernel::Pncg(k) => k.name(),
            AnyKernel::Gwl(k) => k.name(),
            AnyKernel::Rwm(k) => k.name(),
            AnyKernel::Mucola(k) => k.name(),
            AnyKernel::Hybrid(k) => k.name(),
        }
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        match self {
            AnyKernel::Pncg(k) => k.energy(state),
            AnyKernel::Gwl(k) => k.energy(state),
            AnyKernel::Rwm(k) => k.energy(state),
            AnyKernel::Mucola(k) => k.energy(state),
            AnyKernel::Hybrid(k) => k.energy(state),
        }
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        match self {
            AnyKernel::Pncg(k) => k.step(state, rng),
            AnyKernel::Gwl(k) => k.step(state, rng),
            AnyKernel::Rwm(k) => k.step(state, rng),
            AnyKernel::Mucola(k) => k.step(state, rng),
            AnyKernel::Hybrid(k) => k.step(state, rng),
        }
    }
}

/// Enumerates the model's state space, mapping a blown cap to exit code 3.
pub fn enumerate(model: &Model, cap: u128) -> Result<StateSpace, CliError> {
    enumerate_states(model.table(), model.positions(), cap).map_err(classify)
}

/// Deterministic start for every chain: token 0 at every position.
pub fn initial_state(model: &Model) -> Result<SequenceState, CliError> {
    SequenceState::new(model.table(), vec![0; model.positions()]).map_err(classify)
}

/// RNG for one kernel run: the seed picks the ChaCha key, the kernel's slot
/// in the command picks an independent stream of the same key, so runs never
/// share draws yet stay a pure function of the seed.
pub fn run_rng(seed: u64, stream: u64) -> gradmcmc::ChaCha12Rng {
    let mut rng = gradmcmc::seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

/// Resolves flag overrides against the config's own values.
pub fn resolve_invocation(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    out: Option<&PathBuf>,
    cap: Option<u128>,
    emit_states: bool,
) -> Result<Invocation, CliError> {
    let mut seeds = if seeds.is_empty() {
        cfg.seeds.clone()
    } else {
        let mut seen = std::collections::BTreeSet::new();
        for &s in seeds {
            if !seen.insert(s) {
                return Err(CliError::Config(format!(
                    "--seed {s} given twice; outputs are keyed by seed"
                )));
            }
        }
        seeds.to_vec()
    };
    // Merge order is ascending seed value, so the artifacts are indifferent
    // to the order the flags were typed in.
    seeds.sort_unstable();
    Ok(Invocation {
        seeds,
        out: out
            .cloned()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        cap: cap.unwrap_or(cfg.cap),
        emit_states,
    })
}
