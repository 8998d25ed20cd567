//! Metropolis–Hastings acceptance, shared by every adjusted kernel.

use rand::{Rng, RngCore};

use crate::energy::{energy_eval, EnergyModel, SequenceState};
use crate::math;
use crate::samplers::StepRecord;
use crate::Result;

/// A candidate plus both proposal log-probabilities, ready for acceptance.
#[derive(Debug, Clone)]
pub struct MhProposal {
    /// Proposed next state.
    pub candidate: SequenceState,
    /// `log q(candidate | current)`.
    pub forward_log_q: f64,
    /// `log q(current | candidate)`.
    pub reverse_log_q: f64,
    /// Positions where the candidate differs from the current state.
    pub proposed_changes: usize,
}

/// Outcome of one acceptance decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhDecision {
    /// Whether the candidate was taken.
    pub accepted: bool,
    /// Clamped log acceptance ratio `min(0, log r)`.
    pub log_accept_ratio: f64,
    /// The candidate energy was non-finite; the step was forced to reject.
    pub non_finite: bool,
}

/// Accept/reject entirely in log space.
///
/// The log ratio is `U(x) - U(x') + log q(x|x') - log q(x'|x)`, clamped at 0
/// so a favourable ratio is never exponentiated. One uniform is always drawn
/// (whatever the ratio), keeping RNG consumption per step constant; accepting
/// iff `ln(1 - u) <= min(0, log r)` makes a ratio of exactly 0 accept with
/// probability 1. A non-finite candidate energy rejects and flags the record
/// instead of propagating NaN into the chain.
pub fn mh_accept(
    current_energy: f64,
    candidate_energy: f64,
    forward_log_q: f64,
    reverse_log_q: f64,
    rng: &mut dyn RngCore,
) -> MhDecision {
    let u: f64 = rng.random();
    if !candidate_energy.is_finite() {
        return MhDecision {
            accepted: false,
            log_accept_ratio: f64::NEG_INFINITY,
            non_finite: true,
        };
    }
    let log_ratio = current_energy - candidate_energy + reverse_log_q - forward_log_q;
    let clamped = if log_ratio < 0.0 { log_ratio } else { 0.0 };
    if clamped.is_nan() {
        // Impossible reverse move (-inf) minus impossible forward move can
        // surface as NaN; treat it as an invalid proposal and reject.
        return MhDecision {
            accepted: false,
            log_accept_ratio: f64::NEG_INFINITY,
            non_finite: false,
        };
    }
    MhDecision {
        accepted: math::ln(1.0 - u) <= clamped,
        log_accept_ratio: clamped,
        non_finite: false,
    }
}

/// One Metropolis–Hastings transition from an externally supplied proposal.
///
/// Evaluates both energies through `model`, decides via [`mh_accept`], and on
/// acceptance writes the candidate into `state`. A self-proposal (candidate
/// equal to the current state, with matching forward and reverse log q) gives
/// a log ratio of exactly 0 and is always accepted.
pub fn mh_step<M: EnergyModel + ?Sized>(
    model: &M,
    state: &mut SequenceState,
    proposal: MhProposal,
    rng: &mut dyn RngCore,
) -> Result<StepRecord> {
    let current_energy = energy_eval(model, state)?;
    let candidate_energy = energy_eval(model, &proposal.candidate)?;
    let decision = mh_accept(
        current_energy,
        candidate_energy,
        proposal.forward_log_q,
        proposal.reverse_log_q,
        rng,
    );
    if decision.accepted {
        *state = proposal.candidate;
    }
    Ok(StepRecord {
        energy: if decision.accepted {
            candidate_energy
        } else {
            current_energy
        },
        accepted: decision.accepted,
        log_accept_ratio: decision.log_accept_ratio,
        proposed_changes: proposal.proposed_changes,
        non_finite_energy: decision.non_finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{EmbeddingTable, LogQuadraticEnergy};
    use crate::seeded_rng;
    use alloc::vec;
    use alloc::vec::Vec;

    fn flat_model() -> LogQuadraticEnergy {
        let t = EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap();
        LogQuadraticEnergy::new(t, 1, vec![0.0], vec![0.0], 1.0).unwrap()
    }

    #[test]
    fn symmetric_equal_energy_proposal_always_accepts() {
        let model = flat_model();
        let mut rng = seeded_rng(3);
        for _ in 0..200 {
            let mut state = SequenceState::new(model.table(), vec![0]).unwrap();
            let candidate = SequenceState::new(model.table(), vec![1]).unwrap();
            let rec = mh_step(
                &model,
                &mut state,
                MhProposal {
                    candidate,
                    forward_log_q: -0.5,
                    reverse_log_q: -0.5,
                    proposed_changes: 1,
                },
                &mut rng,
            )
            .unwrap();
            assert!(rec.accepted);
            assert_eq!(rec.log_accept_ratio, 0.0);
            assert_eq!(state.tokens(), &[1]);
        }
    }

    #[test]
    fn self_proposal_has_exactly_zero_ratio() {
        let model = flat_model();
        let mut rng = seeded_rng(4);
        let mut state = SequenceState::new(model.table(), vec![1]).unwrap();
        let candidate = state.clone();
        let rec = mh_step(
            &model,
            &mut state,
            MhProposal {
                candidate,
                forward_log_q: -1.25,
                reverse_log_q: -1.25,
                proposed_changes: 0,
            },
            &mut rng,
        )
        .unwrap();
        assert!(rec.accepted);
        assert_eq!(rec.log_accept_ratio, 0.0);
    }

    #[test]
    fn exact_conditional_proposal_cancels() {
        // Single position, two tokens, energies U(-1) and U(+1): proposing
        // directly from the conditional pi makes the MH ratio cancel to 0 up
        // to floating-point noise, so everything is accepted.
        let t = EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap();
        let model = LogQuadraticEnergy::new(t, 1, vec![0.0], vec![0.8], 1.0).unwrap();
        let states: Vec<SequenceState> = (0..2)
            .map(|k| SequenceState::new(model.table(), vec![k]).unwrap())
            .collect();
        let energies: Vec<f64> = states
            .iter()
            .map(|s| energy_eval(&model, s).unwrap())
            .collect();
        let log_z = crate::math::log_sum_exp(&[-energies[0], -energies[1]]);
        let log_pi = [-energies[0] - log_z, -energies[1] - log_z];

        let mut rng = seeded_rng(5);
        for from in 0..2 {
            for to in 0..2 {
                let mut state = states[from].clone();
                let rec = mh_step(
                    &model,
                    &mut state,
                    MhProposal {
                        candidate: states[to].clone(),
                        forward_log_q: log_pi[to],
                        reverse_log_q: log_pi[from],
                        proposed_changes: usize::from(from != to),
                    },
                    &mut rng,
                )
                .unwrap();
                assert!(rec.accepted);
                assert!(rec.log_accept_ratio.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn energy_barrier_rejects_at_the_right_rate() {
        // Symmetric proposal against an energy gap of 2: acceptance of the
        // uphill move should match exp(-2) closely over many tries.
        let t = EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap();
        let model = LogQuadraticEnergy::new(t, 1, vec![0.0], vec![-1.0], 1.0).unwrap();
        let mut rng = seeded_rng(6);
        let tries = 40_000;
        let mut taken = 0;
        for _ in 0..tries {
            let mut state = SequenceState::new(model.table(), vec![0]).unwrap();
            let candidate = SequenceState::new(model.table(), vec![1]).unwrap();
            let rec = mh_step(
                &model,
                &mut state,
                MhProposal {
                    candidate,
                    forward_log_q: 0.0,
                    reverse_log_q: 0.0,
                    proposed_changes: 1,
                },
                &mut rng,
            )
            .unwrap();
            if rec.accepted {
                taken += 1;
                assert!((rec.log_accept_ratio + 2.0).abs() < 1e-12);
            }
        }
        let rate = taken as f64 / tries as f64;
        let expect = (-2.0f64).exp();
        let sigma = (expect * (1.0 - expect) / tries as f64).sqrt();
        assert!(
            (rate - expect).abs() < 4.0 * sigma,
            "rate {rate} vs expectation {expect}"
        );
    }

    #[test]
    fn non_finite_candidate_rejects_and_flags() {
        struct NanModel(EmbeddingTable);
        impl EnergyModel for NanModel {
            fn positions(&self) -> usize {
                1
            }
            fn table(&self) -> &EmbeddingTable {
                &self.0
            }
            fn energy(&self, x: &[f64]) -> f64 {
                if x[0] > 0.0 {
                    f64::NAN
                } else {
                    0.0
                }
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                vec![0.0; x.len()]
            }
        }
        let model = NanModel(EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap());
        let mut rng = seeded_rng(7);
        let mut state = SequenceState::new(model.table(), vec![0]).unwrap();
        let candidate = SequenceState::new(model.table(), vec![1]).unwrap();
        let rec = mh_step(
            &model,
            &mut state,
            MhProposal {
                candidate,
                forward_log_q: 0.0,
                reverse_log_q: 0.0,
                proposed_changes: 1,
            },
            &mut rng,
        )
        .unwrap();
        assert!(!rec.accepted);
        assert!(rec.non_finite_energy);
        assert_eq!(state.tokens(), &[0]);
        assert_eq!(rec.energy, 0.0);
    }
}
