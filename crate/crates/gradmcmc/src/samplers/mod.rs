//! Simulation kernels and the chain driver.
//!
//! Every kernel implements [`ChainKernel`]: a single transition from the
//! current [`SequenceState`], drawing all randomness from the caller's RNG so
//! a `(kernel configuration, seed)` pair determines the whole trace. The
//! gradient-informed kernels cache the current state's energy and gradient,
//! so an accepted step costs one fresh gradient evaluation (at the candidate)
//! and a rejected step costs the same with the cache retained.

mod gwl;
mod hybrid;
mod metropolis;
mod mucola;
mod pncg;
mod rwm;

pub use gwl::{gwl_candidate_logits, gwl_log_q, gwl_propose, GwlConfig, GwlKernel, ScanOrder};
pub(crate) use gwl::logits_with_gradient as gwl_logits_with_gradient;
pub use hybrid::{hybrid_should_switch, HybridConfig, HybridKernel};
pub use metropolis::{mh_accept, mh_step, MhDecision, MhProposal};
pub use mucola::{mucola_step, MucolaConfig, MucolaKernel};
pub use pncg::{
    pncg_log_probs, pncg_log_q, pncg_position_logits, pncg_propose, PncgConfig, PncgKernel,
};
pub use rwm::{rwm_propose, RwmKernel};

use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::RngCore;

use crate::energy::SequenceState;

/// What one kernel transition did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Energy of the chain state after the step.
    pub energy: f64,
    /// Whether the proposal was taken. Unadjusted kernels always report true.
    pub accepted: bool,
    /// Clamped log acceptance ratio `min(0, log r)`; 0 for unadjusted kernels.
    pub log_accept_ratio: f64,
    /// Number of positions the proposal differed from the current state in.
    pub proposed_changes: usize,
    /// The candidate's energy was non-finite, forcing a rejection.
    pub non_finite_energy: bool,
}

impl StepRecord {
    /// Number of positions the step actually changed (0 on rejection).
    pub fn actual_changes(&self) -> usize {
        if self.accepted {
            self.proposed_changes
        } else {
            0
        }
    }
}

/// A proposal drawn from a gradient-informed distribution, together with its
/// forward log proposal probability.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// The proposed sequence.
    pub state: SequenceState,
    /// `log q(candidate | current)` under the proposing kernel.
    pub forward_log_q: f64,
    /// Positions where the candidate differs from the current state.
    pub changes: usize,
}

/// One Markov transition over embedded sequences.
pub trait ChainKernel {
    /// Short stable identifier ("pncg", "gwl", ...), used in reports.
    fn name(&self) -> &'static str;

    /// Energy of an arbitrary state under this kernel's model.
    fn energy(&self, state: &SequenceState) -> f64;

    /// Advances `state` by one transition, drawing from `rng`.
    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord;
}

/// A recorded trajectory: the initial state at index 0 followed by one entry
/// per transition.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    positions: usize,
    energies: Vec<f64>,
    accepted: Vec<bool>,
    changes: Vec<u32>,
    tokens: Vec<u32>,
    aborted: bool,
}

impl ChainTrace {
    fn with_capacity(positions: usize, steps: usize) -> Self {
        Self {
            positions,
            energies: Vec::with_capacity(steps + 1),
            accepted: Vec::with_capacity(steps + 1),
            changes: Vec::with_capacity(steps + 1),
            tokens: Vec::with_capacity((steps + 1) * positions),
            aborted: false,
        }
    }

    fn push(&mut self, record: &StepRecord, state: &SequenceState) {
        self.energies.push(record.energy);
        self.accepted.push(record.accepted);
        self.changes.push(record.actual_changes() as u32);
        self.tokens
            .extend(state.tokens().iter().map(|&t| t as u32));
    }

    /// Number of recorded entries (steps + 1 when not aborted).
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    /// True when nothing was recorded.
    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Sequence length of the recorded states.
    pub fn positions(&self) -> usize {
        self.positions
    }

    /// Energy of the state at entry `t`.
    pub fn energy(&self, t: usize) -> f64 {
        self.energies[t]
    }

    /// All recorded energies, in step order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Whether entry `t` was an accepted transition (entry 0 is always true).
    pub fn accepted(&self, t: usize) -> bool {
        self.accepted[t]
    }

    /// Positions actually changed at entry `t`.
    pub fn changed_positions(&self, t: usize) -> u32 {
        self.changes[t]
    }

    /// Token indices of the state at entry `t`.
    pub fn state_tokens(&self, t: usize) -> &[u32] {
        &self.tokens[t * self.positions..(t + 1) * self.positions]
    }

    /// Token indices of the last recorded state.
    pub fn final_tokens(&self) -> &[u32] {
        self.state_tokens(self.len() - 1)
    }

    /// True when a callback stopped the run early; the trace holds everything
    /// recorded up to that point.
    pub fn aborted(&self) -> bool {
        self.aborted
    }

    /// Fraction of transitions accepted (entry 0 excluded).
    pub fn acceptance_rate(&self) -> f64 {
        if self.len() <= 1 {
            return 0.0;
        }
        let taken = self.accepted[1..].iter().filter(|&&a| a).count();
        taken as f64 / (self.len() - 1) as f64
    }
}

/// Runs `steps` transitions of `kernel` from `initial`, recording each state.
///
/// The initial state is recorded as entry 0 (trivially "accepted", zero
/// changes) and also passed to the callback with `t = 0`, so downstream
/// total-variation curves start from the point-mass distribution. Returning
/// [`ControlFlow::Break`] from the callback stops the run; the partial trace
/// is returned with [`ChainTrace::aborted`] set.
pub fn run_chain<K, F>(
    kernel: &mut K,
    initial: SequenceState,
    steps: usize,
    rng: &mut dyn RngCore,
    mut on_step: F,
) -> ChainTrace
where
    K: ChainKernel + ?Sized,
    F: FnMut(usize, &StepRecord, &SequenceState) -> ControlFlow<()>,
{
    let mut state = initial;
    let mut trace = ChainTrace::with_capacity(state.positions(), steps);

    let start = StepRecord {
        energy: kernel.energy(&state),
        accepted: true,
        log_accept_ratio: 0.0,
        proposed_changes: 0,
        non_finite_energy: false,
    };
    trace.push(&start, &state);
    if on_step(0, &start, &state).is_break() {
        trace.aborted = true;
        return trace;
    }

    for t in 1..=steps {
        let record = kernel.step(&mut state, rng);
        trace.push(&record, &state);
        if on_step(t, &record, &state).is_break() {
            trace.aborted = true;
            return trace;
        }
    }
    trace
}

/// Draws an index from an explicit probability vector by inverse CDF.
///
/// Consumes exactly one uniform; accumulated rounding at the tail falls to
/// the last index.
pub(crate) fn sample_categorical(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
