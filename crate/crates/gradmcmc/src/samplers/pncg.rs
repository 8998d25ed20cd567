//! Norm-constrained gradient proposal over all positions at once.
//!
//! From state `x` with gradient `g = ∇U(x)`, each candidate `x'` gets weight
//! `exp(-g'(x'-x)/2 - ||x'-x||_p^p / (2*alpha))`. Both the linear term and
//! the p-norm penalty decompose over positions, so the proposal factorises
//! into independent per-position softmaxes: position `n` scores token `v` by
//!
//! `logit_n(v) = -g_n'(e_v - x_n)/2 - ||e_v - x_n||_p^p / (2*alpha)`
//!
//! and the current token always scores exactly 0. Small step sizes therefore
//! concentrate the proposal on the current state; large ones let many
//! positions move in a single transition.

use alloc::format;
use alloc::vec::Vec;

use rand::RngCore;

use crate::energy::{energy_eval, gradient_eval, EnergyModel, SequenceState};
use crate::math;
use crate::samplers::{mh_accept, sample_categorical, Candidate, ChainKernel, StepRecord};
use crate::{Error, Result};

/// Step size and norm exponent for the all-position gradient proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PncgConfig {
    /// Step size `alpha > 0`; scales how far the proposal strays.
    pub step_size: f64,
    /// Norm exponent `p >= 1` in the distance penalty.
    pub norm_exponent: f64,
}

impl PncgConfig {
    /// Validated constructor.
    pub fn new(step_size: f64, norm_exponent: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive and finite, got {step_size}"
            )));
        }
        if !(norm_exponent >= 1.0 && norm_exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must be at least 1, got {norm_exponent}"
            )));
        }
        Ok(Self {
            step_size,
            norm_exponent,
        })
    }
}

impl Default for PncgConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            norm_exponent: 2.0,
        }
    }
}

fn logits_from_gradient(
    model: &(impl EnergyModel + ?Sized),
    state: &SequenceState,
    gradient: &[f64],
    cfg: &PncgConfig,
) -> Vec<Vec<f64>> {
    let table = model.table();
    let (n, k, h) = (model.positions(), table.len(), table.dim());
    let mut logits = Vec::with_capacity(n);
    for pos in 0..n {
        let g = &gradient[pos * h..(pos + 1) * h];
        let x = state.position_embedding(pos);
        let mut row = Vec::with_capacity(k);
        for v in 0..k {
            let e = table.vector(v);
            let mut lin = 0.0;
            let mut pen = 0.0;
            for d in 0..h {
                let delta = e[d] - x[d];
                lin += g[d] * delta;
                pen += math::abs_pow(delta, cfg.norm_exponent);
            }
            row.push(-0.5 * lin - pen / (2.0 * cfg.step_size));
        }
        logits.push(row);
    }
    logits
}

/// Per-position proposal logits (`N` rows of `K` entries) at `state`.
///
/// Row `n`, entry `v` is the unnormalised log proposal weight for putting
/// token `v` at position `n`; the entry for the current token is exactly 0.
pub fn pncg_position_logits<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    cfg: &PncgConfig,
) -> Result<Vec<Vec<f64>>> {
    let gradient = gradient_eval(model, state)?;
    Ok(logits_from_gradient(model, state, &gradient, cfg))
}

/// Per-position log proposal probabilities: the logits of
/// [`pncg_position_logits`], normalised within each position.
pub fn pncg_log_probs<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    cfg: &PncgConfig,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = pncg_position_logits(model, state, cfg)?;
    for row in &mut rows {
        let lse = math::log_sum_exp(row);
        for l in row.iter_mut() {
            *l -= lse;
        }
    }
    Ok(rows)
}

fn propose_from_log_probs(
    table_state: &SequenceState,
    model: &(impl EnergyModel + ?Sized),
    log_probs: &[Vec<f64>],
    rng: &mut dyn RngCore,
) -> Result<Candidate> {
    let table = model.table();
    let mut next = table_state.clone();
    let mut forward_log_q = 0.0;
    let mut changes = 0;
    for (pos, row) in log_probs.iter().enumerate() {
        let probs: Vec<f64> = row.iter().map(|&l| math::exp(l)).collect();
        let pick = sample_categorical(&probs, rng);
        forward_log_q += row[pick];
        if pick != table_state.tokens()[pos] {
            changes += 1;
            next.set_token(table, pos, pick)?;
        }
    }
    Ok(Candidate {
        state: next,
        forward_log_q,
        changes,
    })
}

/// Draws one candidate from the factorised proposal at `state`.
///
/// Each position is sampled independently from its softmax; the returned
/// forward log q is the sum of the sampled tokens' log probabilities and
/// equals [`pncg_log_q`] of the pair exactly.
pub fn pncg_propose<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    cfg: &PncgConfig,
    rng: &mut dyn RngCore,
) -> Result<Candidate> {
    let log_probs = pncg_log_probs(model, state, cfg)?;
    propose_from_log_probs(state, model, &log_probs, rng)
}

/// Log proposal probability `log q(to | from)` of the all-position proposal.
///
/// Defined (finite) for every pair of states over the model's vocabulary,
/// including `to == from`, because every position proposes from a full
/// softmax over all tokens.
pub fn pncg_log_q<M: EnergyModel + ?Sized>(
    model: &M,
    from: &SequenceState,
    to: &SequenceState,
    cfg: &PncgConfig,
) -> Result<f64> {
    if from.positions() != to.positions() {
        return Err(Error::DimensionMismatch {
            context: "proposal endpoint sequence lengths",
            expected: from.positions(),
            got: to.positions(),
        });
    }
    let log_probs = pncg_log_probs(model, from, cfg)?;
    let mut total = 0.0;
    for (pos, row) in log_probs.iter().enumerate() {
        let token = to.tokens()[pos];
        if token >= row.len() {
            return Err(Error::TokenOutOfRange {
                index: token,
                table_size: row.len(),
            });
        }
        total += row[token];
    }
    Ok(total)
}

/// Metropolis-adjusted chain built on the all-position gradient proposal.
///
/// Caches the current state's energy and gradient, so each step evaluates
/// one fresh energy and gradient at the candidate (needed anyway for the
/// reverse proposal probability); on acceptance the cache rolls forward.
pub struct PncgKernel<M: EnergyModel> {
    model: M,
    cfg: PncgConfig,
    cache: Option<Cache>,
}

struct Cache {
    tokens: Vec<usize>,
    energy: f64,
    log_probs: Vec<Vec<f64>>,
}

impl<M: EnergyModel> PncgKernel<M> {
    /// Builds the kernel; the configuration is validated.
    pub fn new(model: M, cfg: PncgConfig) -> Result<Self> {
        PncgConfig::new(cfg.step_size, cfg.norm_exponent)?;
        Ok(Self {
            model,
            cfg,
            cache: None,
        })
    }

    /// The kernel's configuration.
    pub fn config(&self) -> &PncgConfig {
        &self.cfg
    }

    /// The model the kernel samples from.
    pub fn model(&self) -> &M {
        &self.model
    }

    fn refresh_cache(&mut self, state: &SequenceState) -> Result<()> {
        let stale = match &self.cache {
            Some(c) => c.tokens != state.tokens(),
            None => true,
        };
        if stale {
            let energy = energy_eval(&self.model, state)?;
            let log_probs = pncg_log_probs(&self.model, state, &self.cfg)?;
            self.cache = Some(Cache {
                tokens: state.tokens().to_vec(),
                energy,
                log_probs,
            });
        }
        Ok(())
    }
}

impl<M: EnergyModel> ChainKernel for PncgKernel<M> {
    fn name(&self) -> &'static str {
        "pncg"
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        self.model.energy(state.embedding())
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        self.refresh_cache(state).expect("state incompatible with model");
        let (current_energy, candidate) = {
            let cache = self.cache.as_ref().unwrap();
            let candidate = propose_from_log_probs(state, &self.model, &cache.log_probs, rng)
                .expect("proposal construction cannot fail after cache refresh");
            (cache.energy, candidate)
        };

        let candidate_energy = self.model.energy(candidate.state.embedding());
        // The reverse log q needs the candidate's own softmax rows; compute
        // them unconditionally (they also become the new cache on accept).
        let reverse_rows = pncg_log_probs(&self.model, &candidate.state, &self.cfg)
            .expect("candidate is over the same vocabulary");
        let reverse_log_q: f64 = reverse_rows
            .iter()
            .enumerate()
            .map(|(pos, row)| row[state.tokens()[pos]])
            .sum();

        let decision = mh_accept(
            current_energy,
            candidate_energy,
            candidate.forward_log_q,
            reverse_log_q,
            rng,
        );
        if decision.accepted {
            self.cache = Some(Cache {
                tokens: candidate.state.tokens().to_vec(),
                energy: candidate_energy,
                log_probs: reverse_rows,
            });
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
            proposed_changes: candidate.changes,
            non_finite_energy: decision.non_finite,
        }
    }
}
