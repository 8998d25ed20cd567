//! Unadjusted Langevin step with nearest-embedding projection.
//!
//! One step from `x`: take the continuous Langevin update
//! `y = x - (alpha/2) ∇U(x) + sqrt(alpha) * xi` with standard normal `xi`,
//! then project each position's block of `y` back to the nearest embedding
//! vector. There is no accept/reject stage, and the projection is not
//! accounted for in any ratio — the chain's stationary distribution is
//! therefore *not* `pi` in general. It is included deliberately as the
//! unfaithful baseline; the `exact` module can quantify the bias when the
//! transition probabilities have a closed form.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::energy::{gradient_eval, EnergyModel, SequenceState};
use crate::math;
use crate::samplers::{ChainKernel, StepRecord};
use crate::{Error, Result};

/// Step size for the projected Langevin kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MucolaConfig {
    /// Step size `alpha > 0`: drift scale `alpha/2`, noise scale `sqrt(alpha)`.
    pub step_size: f64,
}

impl MucolaConfig {
    /// Validated constructor.
    pub fn new(step_size: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive and finite, got {step_size}"
            )));
        }
        Ok(Self { step_size })
    }
}

impl Default for MucolaConfig {
    fn default() -> Self {
        Self { step_size: 1.5 }
    }
}

/// Advances `state` by one projected Langevin step, in place.
///
/// Consumes exactly `N * h` standard normals in coordinate order. Projection
/// ties (a coordinate landing exactly midway) resolve to the lowest token
/// index via the embedding table's nearest-vector rule. The returned record
/// reports the move as accepted — the kernel has no rejection — with the
/// number of positions whose token actually changed.
pub fn mucola_step<M: EnergyModel + ?Sized>(
    model: &M,
    state: &mut SequenceState,
    cfg: &MucolaConfig,
    rng: &mut dyn RngCore,
) -> Result<StepRecord> {
    let gradient = gradient_eval(model, state)?;
    let alpha = cfg.step_size;
    let noise_scale = math::sqrt(alpha);
    let x = state.embedding();
    let mut y = Vec::with_capacity(x.len());
    for (xi, gi) in x.iter().zip(&gradient) {
        let noise: f64 = rng.sample(StandardNormal);
        y.push(xi - 0.5 * alpha * gi + noise_scale * noise);
    }

    let table = model.table();
    let h = table.dim();
    let mut changes = 0;
    for pos in 0..model.positions() {
        let token = table.nearest(&y[pos * h..(pos + 1) * h]);
        if token != state.tokens()[pos] {
            state.set_token(table, pos, token)?;
            changes += 1;
        }
    }
    Ok(StepRecord {
        energy: model.energy(state.embedding()),
        accepted: true,
        log_accept_ratio: 0.0,
        proposed_changes: changes,
        non_finite_energy: false,
    })
}

/// Chain wrapper around [`mucola_step`].
pub struct MucolaKernel<M: EnergyModel> {
    model: M,
    cfg: MucolaConfig,
}

impl<M: EnergyModel> MucolaKernel<M> {
    /// Builds the kernel; the configuration is validated.
    pub fn new(model: M, cfg: MucolaConfig) -> Result<Self> {
        MucolaConfig::new(cfg.step_size)?;
        Ok(Self { model, cfg })
    }

    /// The kernel's configuration.
    pub fn config(&self) -> &MucolaConfig {
        &self.cfg
    }

    /// The model the kernel samples from.
    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: EnergyModel> ChainKernel for MucolaKernel<M> {
    fn name(&self) -> &'static str {
        "mucola"
    }

    fn energy(&self, state: &SequenceState) -> f64 {
        self.model.energy(state.embedding())
    }

    fn step(&mut self, state: &mut SequenceState, rng: &mut dyn RngCore) -> StepRecord {
        mucola_step(&self.model, state, &self.cfg, rng).expect("state incompatible with model")
    }
}
