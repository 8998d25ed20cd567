//! Gradient-informed single-position kernel (Gibbs with a Langevin flavour).
//!
//! One position `n` is chosen per step — uniformly at random or by cycling —
//! and a replacement token `v != x_n` is drawn with weight
//!
//! `logit_n(v) = -g_n'(e_v - x_n) - ||e_v - x_n||_p^p / alpha`
//!
//! where `g = ∇U(x)`. The current token is excluded outright, so the
//! proposal's self-transition probability is exactly 0 (contrast with the
//! all-position kernel, where staying put always has positive probability).
//! A Metropolis–Hastings correction with the gradient re-evaluated at the
//! candidate makes the chain target `pi` exactly.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::energy::{energy_eval, gradient_eval, EnergyModel, SequenceState};
use crate::math;
use crate::samplers::{mh_accept, sample_categorical, Candidate, ChainKernel, StepRecord};
use crate::{Error, Result};

/// How the updated position is chosen each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    /// Uniformly random position each step; the chain is homogeneous and has
    /// a closed-form transition matrix.
    Random,
    /// Positions cycle 0, 1, ..., N-1, 0, ... regardless of acceptance.
    Systematic,
}

/// Step size, norm exponent, and scan order for the single-position kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwlConfig {
    /// Step size `alpha > 0`.
    pub step_size: f64,
    /// Norm exponent `p >= 1`.
    pub norm_exponent: f64,
    /// Position schedule.
    pub scan: ScanOrder,
}

impl GwlConfig {
    /// Validated constructor.
    pub fn new(step_size: f64, norm_exponent: f64, scan: ScanOrder) -> Result<Self> {
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
            scan,
        })
    }
}

impl Default for GwlConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            norm_exponent: 2.0,
            scan: ScanOrder::Random,
        }
    }
}

pub(crate) fn logits_with_gradient(
    model: &(impl EnergyModel + ?Sized),
    state: &SequenceState,
    gradient: &[f64],
    cfg: &GwlConfig,
    position: usize,
) -> Vec<(usize, f64)> {
    let table = model.table();
    let h = table.dim();
    let g = &gradient[position * h..(position + 1) * h];
    let x = state.position_embedding(position);
    let current = state.tokens()[position];
    let mut out = Vec::with_capacity(table.len() - 1);
    for v in 0..table.len() {
        if v == current {
            continue;
        }
        let e = table.vector(v);
        let mut lin = 0.0;
        let mut pen = 0.0;
        for d in 0..h {
            let delta = e[d] - x[d];
            lin += g[d] * delta;
            pen += math::abs_pow(delta, cfg.norm_exponent);
        }
        out.push((v, -lin - pen / cfg.step_size));
    }
    out
}

/// Unnormalised log weights `(token, logit)` for replacing the token at
/// `position`, over every token except the current one.
pub fn gwl_candidate_logits<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    cfg: &GwlConfig,
    position: usize,
) -> Result<Vec<(usize, f64)>> {
    if position >= model.positions() {
        return Err(Error::InvalidParameter(format!(
            "position {position} out of range for {} positions",
            model.positions()
        )));
    }
    if model.table().len() < 2 {
        return Err(Error::NoLegalMove);
    }
    let gradient = gradient_eval(model, state)?;
    Ok(logits_with_gradient(model, state, &gradient, cfg, position))
}

/// Draws a replacement token at `position` from the softmax over
/// [`gwl_candidate_logits`].
///
/// The candidate always differs from the current state in exactly that
/// position. Under random scan the stored forward log q includes the
/// `1/N` position-selection factor; under systematic scan the position is
/// deterministic and the value is the plain conditional log probability.
pub fn gwl_propose<M: EnergyModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    cfg: &GwlConfig,
    position: usize,
    rng: &mut dyn RngCore,
) -> Result<Candidate> {
    let logits = gwl_candidate_logits(model, state, cfg, position)?;
    let raw: Vec<f64> = logits.iter().map(|&(_, l)| l).collect();
    let lse = math::log_sum_exp(&raw);
    let probs: Vec<f64> = raw.iter().map(|&l| math::exp(l - lse)).collect();
    let pick = sample_categorical(&probs, rng);
    let (token, logit) = logits[pick];
    let mut next = state.clone();
    next.set_token(model.table(), position, token)?;
    let scan_term = match cfg.scan {
        ScanOrder::Random => -math::ln(model.positions() as f64),
        ScanOrder::Systematic => 0.0,
    };
    Ok(Candidate {
        state: next,
        forward_log_q: logit - lse + scan_term,
        changes: 1,
    })
}

/// Log proposal probability `log q(to | from)` of the single-position kernel.
///
/// Returns `None` for transitions the proposal cannot make: staying put or
/// changing two or more positions. Under random scan the value includes the
/// `1/N` position factor; under systematic scan it is the conditional log
/// probability at the (single) differing position.
pub fn gwl_log_q<M: EnergyModel + ?Sized>(
    model: &M,
    from: &SequenceState,
    to: &SequenceState,
    cfg: &GwlConfig,
) -> Result<Option<f64>> {
    if from.positions() != to.positions() {
        return Err(Error::DimensionMismatch {
            context: "proposal endpoint sequence lengths",
            expected: from.positions(),
            got: to.positions(),
        });
    }
    if from.hamming_distance(to) != 1 {
        return Ok(None);
    }
    let position = from
        .tokens()
        .iter()
        .zip(to.tokens())
        .position(|(a, b)| a != b)
        .expect("hamming distance 1 guarantees a differing position");
    let logits = gwl_candidate_logits(model, from, cfg, position)?;
    let raw: Vec<f64> = logits.iter().map(|&(_, l)| l).collect();
    let lse = math::log_sum_exp(&raw);
    let target = to.tokens()[position];
    let logit = logits
        .iter()
        .find(|&&(v, _)| v == target)
        .map(|&(_, l)| l)
        .expect("target token differs from current, so it is a candidate");
    let scan_term = match cfg.scan {
        ScanOrder::Random => -math::ln(model.positions() as f64),
        ScanOrder::Systematic => 0.0,
    };
    Ok(Some(logit - lse + scan_term))
}

/// Metropolis-adjusted single-position chain.
///
/// Each step picks a position per the scan order, proposes a replacement
/// token, and accepts with the ratio built from the gradient at the current
/// state (forward) and at the candidate (reverse); the position-selection
/// factor cancels. Caches the current energy and gradient keyed by tokens.
pub struct GwlKernel<M: EnergyModel> {
    model: M,
    cfg: GwlConfig,
    next_position: usize,
    cache: Option<Cache>,
}

struct Cache {
    tokens: Vec<usize>,
    energy: f64,
    gradient: Vec<f64>,
}

impl<M: EnergyModel> GwlKernel<M> {
    /// Builds the kernel; the configuration is validated.
    pub fn new(model: M, cfg: GwlConfig) -> Result<Self> {
        GwlConfig::new(cfg.step_size, cfg.norm_exponent, cfg.scan)?;
        if model.table().len() < 2 {
            return Err(Error::NoLegalMove);
        }
        Ok(Self {
            model,
            cfg,
            next_position: 0,
            cache: None,
        })
    }

    /// The kernel's configuration.
    pub fn config(&self) -> &GwlConfig {
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
            self.cache = Some(Cache {
                tokens: state.tokens().to_vec(),
                energy: energy_eval(&self.model, state)?,
                gradient: gradient_eval(&self.model, state)?,
            });
        }
        Ok(())
    }
}

impl<M: EnergyModel> ChainKernel for GwlKernel<M> {
    fn name(&self) -> &'static str {
        "gwl"
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        self.model.energy(state.embedding())
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        self.refresh_cache(state).expect("state incompatible with model");
        let position = match self.cfg.scan {
            ScanOrder::Random => rng.random_range(0..self.model.positions()),
            ScanOrder::Systematic => {
                let p = self.next_position;
                self.next_position = (p + 1) % self.model.positions();
                p
            }
        };

        // Forward conditional from the cached gradient.
        let (current_energy, candidate, forward_cond) = {
            let cache = self.cache.as_ref().unwrap();
            let logits = logits_with_gradient(&self.model, state, &cache.gradient, &self.cfg, position);
            let raw: Vec<f64> = logits.iter().map(|&(_, l)| l).collect();
            let lse = math::log_sum_exp(&raw);
            let probs: Vec<f64> = raw.iter().map(|&l| math::exp(l - lse)).collect();
            let pick = sample_categorical(&probs, rng);
            let (token, logit) = logits[pick];
            let mut next = state.clone();
            next.set_token(self.model.table(), position, token)
                .expect("candidate token comes from the model's own table");
            (cache.energy, next, logit - lse)
        };

        let candidate_energy = self.model.energy(candidate.embedding());
        if !candidate_energy.is_finite() {
            // Keep RNG consumption identical to the normal path.
            let decision = mh_accept(current_energy, candidate_energy, 0.0, 0.0, rng);
            return StepRecord {
                energy: current_energy,
                accepted: false,
                log_accept_ratio: decision.log_accept_ratio,
                proposed_changes: 1,
                non_finite_energy: true,
            };
        }

        // Reverse conditional needs the gradient at the candidate.
        let candidate_gradient = self.model.gradient(candidate.embedding());
        let reverse_cond = {
            let logits =
                logits_with_gradient(&self.model, &candidate, &candidate_gradient, &self.cfg, position);
            let raw: Vec<f64> = logits.iter().map(|&(_, l)| l).collect();
            let lse = math::log_sum_exp(&raw);
            let current_token = state.tokens()[position];
            let logit = logits
                .iter()
                .find(|&&(v, _)| v == current_token)
                .map(|&(_, l)| l)
                .expect("reverse move restores the current token");
            logit - lse
        };

        let decision = mh_accept(current_energy, candidate_energy, forward_cond, reverse_cond, rng);
        if decision.accepted {
            self.cache = Some(Cache {
                tokens: candidate.tokens().to_vec(),
                energy: candidate_energy,
                gradient: candidate_gradient,
            });
            *state = candidate;
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
            non_finite_energy: false,
        }
    }
}
