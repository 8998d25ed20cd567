//! Two-phase kernel: all-position proposals first, single-position later.
//!
//! The all-position gradient proposal makes large early strides, but once
//! the chain reaches high-probability states most of its multi-position
//! candidates are rejected and accepted steps change few positions. At that
//! point a single-position kernel explores more efficiently per evaluation.
//! The hybrid runs the all-position kernel until its accepted steps look
//! local — or a step budget runs out — then hands over permanently.

use alloc::vec::Vec;

use rand::RngCore;

use crate::energy::{EnergyModel, SequenceState};
use crate::samplers::{ChainKernel, GwlKernel, PncgKernel, StepRecord};
use crate::{Error, Result};

/// Switch rule for the two-phase kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    /// Number of most recent accepted first-phase steps to average over.
    pub window: usize,
    /// Switch when the windowed mean of changed positions drops to this.
    pub change_threshold: f64,
    /// Unconditional switch after this many first-phase steps.
    pub max_initial_steps: usize,
}

impl HybridConfig {
    /// Validated constructor.
    pub fn new(window: usize, change_threshold: f64, max_initial_steps: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "switch window must be at least 1",
            )));
        }
        if !(change_threshold >= 0.0 && change_threshold.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "change threshold must be non-negative and finite, got {change_threshold}"
            )));
        }
        if max_initial_steps == 0 {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "first-phase step budget must be at least 1",
            )));
        }
        Ok(Self {
            window,
            change_threshold,
            max_initial_steps,
        })
    }
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            window: 100,
            change_threshold: 1.0,
            max_initial_steps: 10_000,
        }
    }
}

/// Decides whether the first phase is over, given its step records so far.
///
/// True when the history already spans `max_initial_steps`, or when at least
/// `window` steps were accepted and the mean number of positions changed by
/// the last `window` accepted steps is at most `change_threshold`.
pub fn hybrid_should_switch(history: &[StepRecord], cfg: &HybridConfig) -> bool {
    if history.len() >= cfg.max_initial_steps {
        return true;
    }
    let accepted_changes: Vec<usize> = history
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.proposed_changes)
        .collect();
    if accepted_changes.len() < cfg.window {
        return false;
    }
    let tail = &accepted_changes[accepted_changes.len() - cfg.window..];
    let mean = tail.iter().sum::<usize>() as f64 / cfg.window as f64;
    mean <= cfg.change_threshold
}

/// All-position kernel until progress looks local, then single-position.
///
/// The switch is one-way; [`HybridKernel::switch_step`] reports when it
/// happened. Both phases share the model and the caller's RNG stream, so the
/// full trace stays a deterministic function of the seed.
pub struct HybridKernel<M: EnergyModel> {
    first: PncgKernel<M>,
    second: GwlKernel<M>,
    cfg: HybridConfig,
    history: Vec<StepRecord>,
    switch_step: Option<usize>,
}

impl<M: EnergyModel> HybridKernel<M> {
    /// Builds the two-phase kernel from prebuilt phase kernels.
    pub fn new(first: PncgKernel<M>, second: GwlKernel<M>, cfg: HybridConfig) -> Result<Self> {
        HybridConfig::new(cfg.window, cfg.change_threshold, cfg.max_initial_steps)?;
        Ok(Self {
            first,
            second,
            cfg,
            history: Vec::new(),
            switch_step: None,
        })
    }

    /// Step index (1-based, counting this kernel's own steps) after which the
    /// single-position phase took over; `None` while still in phase one.
    pub fn switch_step(&self) -> Option<usize> {
        self.switch_step
    }

    /// The switch rule in force.
    pub fn config(&self) -> &HybridConfig {
        &self.cfg
    }
}

impl<M: EnergyModel> ChainKernel for HybridKernel<M> {
    fn name(&self) -> &'static str {
        "hybrid"
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        self.first.energy(state)
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        if self.switch_step.is_some() {
            return self.second.step(state, rng);
        }
        let record = self.first.step(state, rng);
        self.history.push(record.clone());
        if hybrid_should_switch(&self.history, &self.cfg) {
            self.switch_step = Some(self.history.len());
            self.history = Vec::new();
        }
        record
    }
}
