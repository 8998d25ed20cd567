//! Random-walk Metropolis baseline: uniform single-token replacement.

use rand::{Rng, RngCore};

use crate::energy::{energy_eval, EnergyModel, SequenceState};
use crate::math;
use crate::samplers::{mh_accept, Candidate, ChainKernel, StepRecord};
use crate::Result;

/// Draws a uniformly random single-token change: position uniform over `N`,
/// replacement uniform over the `K - 1` other tokens.
///
/// The proposal is symmetric; the stored forward log q is
/// `-log(N * (K - 1))`, the same value in both directions.
pub fn rwm_propose<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    rng: &mut dyn RngCore,
) -> Result<Candidate> {
    let n = model.positions();
    let k = model.table().len();
    let position = rng.random_range(0..n);
    let current = state.tokens()[position];
    // Draw from K-1 values and skip over the current token.
    let draw = rng.random_range(0..k - 1);
    let token = if draw >= current { draw + 1 } else { draw };
    let mut next = state.clone();
    next.set_token(model.table(), position, token)?;
    Ok(Candidate {
        state: next,
        forward_log_q: -math::ln((n * (k - 1)) as f64),
        changes: 1,
    })
}

/// Metropolis chain over the uniform single-token proposal.
///
/// Gradient-free: the acceptance ratio reduces to the energy difference
/// because the proposal is symmetric.
pub struct RwmKernel<M: EnergyModel> {
    model: M,
    cached: Option<(alloc::vec::Vec<usize>, f64)>,
}

impl<M: EnergyModel> RwmKernel<M> {
    /// Builds the kernel.
    pub fn new(model: M) -> Self {
        Self {
            model,
            cached: None,
        }
    }

    /// The model the kernel samples from.
    pub fn model(&self) -> &M {
        &self.model
    }

    fn current_energy(&mut self, state: &SequenceState) -> f64 {
        let stale = match &self.cached {
            Some((tokens, _)) => tokens != state.tokens(),
            None => true,
        };
        if stale {
            let e = energy_eval(&self.model, state).expect("state incompatible with model");
            self.cached = Some((state.tokens().to_vec(), e));
        }
        self.cached.as_ref().unwrap().1
    }
}

impl<M: EnergyModel> ChainKernel for RwmKernel<M> {
    fn name(&self) -> &'static str {
        "rwm"
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        self.model.energy(state.embedding())
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        let current_energy = self.current_energy(state);
        let candidate = rwm_propose(&self.model, state, rng)
            .expect("candidate token comes from the model's own table");
        let candidate_energy = self.model.energy(candidate.state.embedding());
        // Symmetric proposal: forward and reverse log q cancel.
        let decision = mh_accept(current_energy, candidate_energy, 0.0, 0.0, rng);
        if decision.accepted {
            self.cached = Some((candidate.state.tokens().to_vec(), candidate_energy));
            *state = candidate.state;
        }
        StepRecord {
            energy: if decision.accepted {
                candidate_energy
            } else {
                current_energy
            },
            accepted: decision.accepted,
            log_accept_ratio: decision.log_accept_ratio,
            proposed_changes: 1,
            non_finite_energy: decision.non_finite,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{EmbeddingTable, LogQuadraticEnergy};
    use crate::seeded_rng;
    use alloc::vec;

    fn toy() -> LogQuadraticEnergy {
        let t = EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap();
        LogQuadraticEnergy::cycle(t, 5, 0.42).unwrap()
    }

    #[test]
    fn proposal_is_uniform_over_single_changes() {
        let m = toy();
        let s = SequenceState::new(m.table(), vec![0, 0, 1, 0, 1]).unwrap();
        let mut rng = seeded_rng(31);
        let mut counts = [0usize; 5];
        let tries = 50_000;
        for _ in 0..tries {
            let c = rwm_propose(&m, &s, &mut rng).unwrap();
            assert_eq!(c.state.hamming_distance(&s), 1);
            assert!((c.forward_log_q - crate::math::ln(0.2)).abs() < 1e-14);
            let pos = c
                .state
                .tokens()
                .iter()
                .zip(s.tokens())
                .position(|(a, b)| a != b)
                .unwrap();
            counts[pos] += 1;
        }
        // Each position should receive about tries/5 draws.
        let expect = tries as f64 / 5.0;
        let sigma = (tries as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn three_token_vocabulary_skips_current() {
        let t = EmbeddingTable::from_scalars(&[-1.0, 0.0, 1.0]).unwrap();
        let m = LogQuadraticEnergy::cycle(t, 3, 0.42).unwrap();
        let s = SequenceState::new(m.table(), vec![1, 1, 1]).unwrap();
        let mut rng = seeded_rng(32);
        let mut seen = [false; 3];
        for _ in 0..200 {
            let c = rwm_propose(&m, &s, &mut rng).unwrap();
            let pos = c
                .state
                .tokens()
                .iter()
                .zip(s.tokens())
                .position(|(a, b)| a != b)
                .unwrap();
            let tok = c.state.tokens()[pos];
            assert_ne!(tok, 1);
            seen[tok] = true;
        }
        assert!(seen[0] && seen[2]);
    }

    #[test]
    fn kernel_is_deterministic_for_a_fixed_seed() {
        let m = toy();
        let run = |seed: u64| {
            let mut k = RwmKernel::new(m.clone());
            let mut s = SequenceState::new(m.table(), vec![0; 5]).unwrap();
            let mut rng = seeded_rng(seed);
            let mut log = alloc::vec::Vec::new();
            for _ in 0..200 {
                let rec = k.step(&mut s, &mut rng);
                log.push((s.tokens().to_vec(), rec.accepted));
            }
            log
        };
        assert_eq!(run(1), run(1));
    }
}
