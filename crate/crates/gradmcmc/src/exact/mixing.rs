//! Mixing times: exact worst-case values by matrix powering, eigenvalue
//! brackets, and the step-size-dependent lower bound for the unadjusted
//! all-position gradient kernel.

use alloc::format;

use nalgebra::DMatrix;

use crate::energy::EnergyModel;
use crate::exact::{
    pi_alpha, spectral_gap, DistributionVector, MatrixKernel, StateSpace, TransitionMatrix,
};
use crate::math;
use crate::samplers::PncgConfig;
use crate::{Error, Result};

/// Result of a capped mixing-time search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingTime {
    /// The smallest `t` with worst-case total variation at most epsilon.
    Exact(usize),
    /// The cap was reached with the worst-case distance still above epsilon.
    AtLeast(usize),
}

impl MixingTime {
    /// The known step count: exact value, or the cap as a lower bound.
    pub fn steps(&self) -> usize {
        match *self {
            MixingTime::Exact(t) | MixingTime::AtLeast(t) => t,
        }
    }

    /// Whether the search terminated below the cap.
    pub fn is_exact(&self) -> bool {
        matches!(self, MixingTime::Exact(_))
    }
}

/// `max_x || P^t(x, .) - pi ||_TV` for the already-powered matrix.
fn worst_row_tv(q: &TransitionMatrix, pi: &DistributionVector) -> f64 {
    (0..q.size())
        .map(|i| crate::exact::tv_between_slices(q.row(i), pi.probs()))
        .fold(0.0, f64::max)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    Ok(())
}

/// Exact worst-case mixing time by repeated matrix powering.
///
/// Multiplies out `P^t` step by step and returns the first `t` whose worst
/// starting state satisfies `||P^t(x, .) - pi||_TV <= epsilon`; `t = 0`
/// (point masses already close, only possible for large epsilon) is checked
/// too. Gives up after `cap` steps with [`MixingTime::AtLeast`], which is the
/// honest answer for periodic or near-reducible chains.
pub fn exact_mixing_time(
    p: &TransitionMatrix,
    pi: &DistributionVector,
    epsilon: f64,
    cap: usize,
) -> Result<MixingTime> {
    check_epsilon(epsilon)?;
    if pi.len() != p.size() {
        return Err(Error::DimensionMismatch {
            context: "distribution vs. transition matrix",
            expected: p.size(),
            got: pi.len(),
        });
    }
    // t = 0: the rows of P^0 are point masses, at distance 1 - pi(x).
    if 1.0 - pi.min_prob() <= epsilon {
        return Ok(MixingTime::Exact(0));
    }
    let mut q = p.clone();
    for t in 1..=cap {
        if worst_row_tv(&q, pi) <= epsilon {
            return Ok(MixingTime::Exact(t));
        }
        if t < cap {
            q = q.multiply(p)?;
        }
    }
    Ok(MixingTime::AtLeast(cap))
}

/// Everything the slow-mixing analysis of the unadjusted all-position kernel
/// produces for one `(step size, epsilon)` pair.
///
/// The headline numbers are `mixing_time` (exact, by powering the transition
/// matrix against the kernel's own stationary law) and `lower_bound` (in
/// closed form from the model constants, no matrix required). The remaining
/// fields expose the ingredients so the bound can be audited term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    /// Proposal step size `alpha`.
    pub step_size: f64,
    /// Proposal norm exponent `p`.
    pub norm_exponent: f64,
    /// Total-variation threshold the mixing time is measured at.
    pub epsilon: f64,
    /// Exact worst-case mixing time of the unadjusted chain toward its own
    /// stationary law, or a cap if the search was cut off.
    pub mixing_time: MixingTime,
    /// Closed-form lower bound `(c1 / Z * exp(c2 / (2 alpha)) - 1) *
    /// ln(1 / (2 epsilon))`. Negative values are vacuous (the bound still
    /// holds, trivially) — they appear once `alpha` is large.
    pub lower_bound: f64,
    /// Peakedness constant `c1 = exp(lambda_min(-H/2) * d2 / 2) / 2`.
    pub c1: f64,
    /// Minimal proposal penalty `c2 = min ||dx||_p^p` over distinct states.
    pub c2: f64,
    /// Partition function of the max-shifted energy, `sum_x exp(max U - U(x))`.
    pub z_shifted: f64,
    /// Smallest eigenvalue of the quadratic-form matrix `-H/2`.
    pub quad_form_min_eig: f64,
    /// Minimal squared Euclidean distance `d2` between distinct states.
    pub min_sq_distance: f64,
    /// Minimal `p`-norm penalty between distinct states (equals `c2`).
    pub min_pnorm_distance: f64,
    /// Absolute spectral gap of the chain (reversible w.r.t. its own law).
    pub spectral_gap: f64,
    /// Second-largest eigenvalue of the chain.
    pub lambda_2: f64,
    /// Smallest stationary probability, as used by the eigenvalue bracket.
    pub stationary_min: f64,
    /// Eigenvalue lower bound `(1 / gamma - 1) * ln(1 / (2 epsilon))`.
    pub levin_lower: f64,
    /// Eigenvalue upper bound `ln(1 / (epsilon * pi_min)) / gamma`.
    pub levin_upper: f64,
}

/// Smallest eigenvalue of the symmetric quadratic-form matrix `-H/2`.
fn quad_form_min_eigenvalue(hessian: &[f64], d: usize) -> Result<f64> {
    let a = DMatrix::<f64>::from_fn(d, d, |r, c| -0.5 * hessian[r * d + c]);
    let min = a
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NumericalFailure(alloc::string::String::from(
            "quadratic-form eigenvalues are not finite",
        )));
    }
    Ok(min)
}

/// Minimal distances between *distinct* states, achieved by single-token
/// moves: `(min ||dx||_2^2, min ||dx||_p^p)` over token pairs.
fn minimal_distances(space: &StateSpace, p: f64) -> (f64, f64) {
    let table = space.table();
    let mut d2 = f64::INFINITY;
    let mut dp = f64::INFINITY;
    for a in 0..table.len() {
        for b in a + 1..table.len() {
            let (va, vb) = (table.vector(a), table.vector(b));
            d2 = d2.min(math::diff_sq_norm(va, vb));
            dp = dp.min(math::diff_pnorm_pow(va, vb, p));
        }
    }
    (d2, dp)
}

/// Full slow-mixing analysis of the unadjusted all-position kernel.
///
/// Builds the exact transition matrix, solves for its stationary law in
/// closed form, and measures the exact mixing time (capped at `step_cap`).
/// Alongside it evaluates the closed-form lower bound
///
/// ```text
/// t_mix(epsilon)  >=  (c1 / Z * exp(c2 / (2 alpha)) - 1) * ln(1 / (2 epsilon))
/// ```
///
/// whose `exp(c2 / (2 alpha))` factor is the point: every move pays at least
/// the minimal penalty `c2 / (2 alpha)` in proposal weight, so shrinking the
/// step size — the very thing that drags the stationary law toward the true
/// target — freezes the chain exponentially fast. The eigenvalue bracket
/// (`levin_lower`, `levin_upper`) sandwiches the same mixing time from the
/// spectral gap and is reported for cross-checking.
pub fn mixing_time_lower_bound<M: EnergyModel + ?Sized>(
    model: &M,
    space: &StateSpace,
    cfg: &PncgConfig,
    epsilon: f64,
    step_cap: usize,
) -> Result<MixingReport> {
    check_epsilon(epsilon)?;
    PncgConfig::new(cfg.step_size, cfg.norm_exponent)?;
    let hessian = model.constant_hessian().ok_or(Error::UnsupportedModel(
        "the slow-mixing bound needs the quadratic-form constant, which \
         requires a constant Hessian",
    ))?;
    let d = model.dim();
    if hessian.len() != d * d {
        return Err(Error::DimensionMismatch {
            context: "constant Hessian vs. model dimension",
            expected: d * d,
            got: hessian.len(),
        });
    }

    let stationary = pi_alpha(model, space, cfg)?;
    let matrix = crate::exact::build_transition_matrix(
        &MatrixKernel::Pncg {
            cfg: *cfg,
            adjusted: false,
        },
        model,
        space,
    )?;
    let gap = spectral_gap(&matrix, &stationary)?;
    let mixing_time = exact_mixing_time(&matrix, &stationary, epsilon, step_cap)?;

    let energies = space.energies(model)?;
    let u_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z_shifted: f64 = energies.iter().map(|&u| math::exp(u_max - u)).sum();

    let quad_form_min_eig = quad_form_min_eigenvalue(&hessian, d)?;
    let (min_sq_distance, min_pnorm_distance) = minimal_distances(space, cfg.norm_exponent);
    let c1 = 0.5 * math::exp(quad_form_min_eig * min_sq_distance / 2.0);
    let c2 = min_pnorm_distance;

    let log_margin = math::ln(1.0 / (2.0 * epsilon));
    let lower_bound = (c1 / z_shifted * math::exp(c2 / (2.0 * cfg.step_size)) - 1.0) * log_margin;

    let stationary_min = stationary.min_prob();
    let (levin_lower, levin_upper) = if gap.gamma > 0.0 {
        (
            (1.0 / gap.gamma - 1.0) * log_margin,
            math::ln(1.0 / (epsilon * stationary_min)) / gap.gamma,
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    Ok(MixingReport {
        step_size: cfg.step_size,
        norm_exponent: cfg.norm_exponent,
        epsilon,
        mixing_time,
        lower_bound,
        c1,
        c2,
        z_shifted,
        quad_form_min_eig,
        min_sq_distance,
        min_pnorm_distance,
        spectral_gap: gap.gamma,
        lambda_2: gap.lambda_2,
        stationary_min,
        levin_lower,
        levin_upper,
    })
}
