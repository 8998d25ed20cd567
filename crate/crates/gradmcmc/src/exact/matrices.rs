//! Closed-form transition matrices for the simulation kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::energy::EnergyModel;
use crate::exact::{StateSpace, TransitionMatrix};
use crate::math;
use crate::samplers::{self, GwlConfig, MucolaConfig, PncgConfig, ScanOrder};
use crate::{Error, Result};

/// Which kernel to materialise as a matrix.
///
/// The gradient and random-walk proposals can each be taken bare
/// (`adjusted: false`, the raw proposal chain) or with the
/// Metropolis–Hastings correction (`adjusted: true`). The projected Langevin
/// kernel is inherently unadjusted. The hybrid kernel is time-inhomogeneous
/// and has no single transition matrix, as is the systematic-scan variant of
/// the single-position kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKernel {
    /// All-position gradient proposal.
    Pncg { cfg: PncgConfig, adjusted: bool },
    /// Single-position gradient proposal with uniformly random positions.
    GwlRandomScan { cfg: GwlConfig, adjusted: bool },
    /// Uniform single-token replacement.
    Rwm { adjusted: bool },
    /// Projected Langevin kernel (closed form only for two scalar tokens).
    Mucola { cfg: MucolaConfig },
    /// Two-phase kernel; always an error to request.
    Hybrid,
}

impl MatrixKernel {
    /// Stable identifier matching [`crate::samplers::ChainKernel::name`].
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKernel::Pncg { .. } => "pncg",
            MatrixKernel::GwlRandomScan { .. } => "gwl",
            MatrixKernel::Rwm { .. } => "rwm",
            MatrixKernel::Mucola { .. } => "mucola",
            MatrixKernel::Hybrid => "hybrid",
        }
    }
}

/// Builds the exact one-step transition matrix of `kernel` over `space`.
pub fn build_transition_matrix<M: EnergyModel + ?Sized>(
    kernel: &MatrixKernel,
    model: &M,
    space: &StateSpace,
) -> Result<TransitionMatrix> {
    space.check_model(model)?;
    match kernel {
        MatrixKernel::Pncg { cfg, adjusted } => pncg_matrix(model, space, cfg, *adjusted),
        MatrixKernel::GwlRandomScan { cfg, adjusted } => gwl_matrix(model, space, cfg, *adjusted),
        MatrixKernel::Rwm { adjusted } => rwm_matrix(model, space, *adjusted),
        MatrixKernel::Mucola { cfg } => mucola_exact_matrix(model, space, cfg),
        MatrixKernel::Hybrid => Err(Error::UnsupportedKernel(
            "hybrid (time-inhomogeneous; analyse its phases separately)",
        )),
    }
}

fn pncg_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    space: &StateSpace,
    cfg: &PncgConfig,
    adjusted: bool,
) -> Result<TransitionMatrix> {
    PncgConfig::new(cfg.step_size, cfg.norm_exponent)?;
    let s = space.size();
    let n = space.positions();
    let energies = space.energies(model)?;

    // Per-state factorised log probabilities; log q(i -> j) is a sum of N
    // table lookups afterwards.
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(s);
    for state in space.iter() {
        rows.push(samplers::pncg_log_probs(model, &state, cfg)?);
    }
    let tokens: Vec<Vec<usize>> = (0..s).map(|i| space.tokens_of(i)).collect();

    let log_q = |from: usize, to: usize| -> f64 {
        let r = &rows[from];
        let t = &tokens[to];
        (0..n).map(|pos| r[pos][t[pos]]).sum()
    };

    let mut data = vec![0.0; s * s];
    for i in 0..s {
        if adjusted {
            let mut off_total = 0.0;
            for j in 0..s {
                if j == i {
                    continue;
                }
                let fwd = log_q(i, j);
                let rev = log_q(j, i);
                let log_ratio = energies[i] - energies[j] + rev - fwd;
                let accept = if log_ratio < 0.0 { math::exp(log_ratio) } else { 1.0 };
                let p = math::exp(fwd) * accept;
                data[i * s + j] = p;
                off_total += p;
            }
            data[i * s + i] = 1.0 - off_total;
        } else {
            for j in 0..s {
                data[i * s + j] = math::exp(log_q(i, j));
            }
        }
    }
    TransitionMatrix::new(s, data)
}

fn gwl_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    space: &StateSpace,
    cfg: &GwlConfig,
    adjusted: bool,
) -> Result<TransitionMatrix> {
    GwlConfig::new(cfg.step_size, cfg.norm_exponent, cfg.scan)?;
    if cfg.scan != ScanOrder::Random {
        return Err(Error::UnsupportedKernel(
            "systematic-scan gwl (one sweep is a product of position kernels)",
        ));
    }
    let s = space.size();
    let n = space.positions();
    let energies = space.energies(model)?;

    // Conditional log probabilities for every (state, position): the list of
    // (replacement token, log prob) pairs.
    let mut cond: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(s);
    for state in space.iter() {
        let grad = model.gradient(state.embedding());
        let mut per_pos = Vec::with_capacity(n);
        for pos in 0..n {
            let logits = samplers::gwl_logits_with_gradient(model, &state, &grad, cfg, pos);
            let raw: Vec<f64> = logits.iter().map(|&(_, l)| l).collect();
            let lse = math::log_sum_exp(&raw);
            per_pos.push(
                logits
                    .into_iter()
                    .map(|(v, l)| (v, l - lse))
                    .collect::<Vec<_>>(),
            );
        }
        cond.push(per_pos);
    }

    let scan_weight = 1.0 / n as f64;
    let mut data = vec![0.0; s * s];
    for i in 0..s {
        let tokens = space.tokens_of(i);
        let mut off_total = 0.0;
        for pos in 0..n {
            for &(v, fwd_cond) in &cond[i][pos] {
                let mut t = tokens.clone();
                t[pos] = v;
                let j = space.index_of(&t)?;
                let p = if adjusted {
                    let rev_cond = cond[j][pos]
                        .iter()
                        .find(|&&(tok, _)| tok == tokens[pos])
                        .map(|&(_, l)| l)
                        .expect("reverse move restores the original token");
                    let log_ratio = energies[i] - energies[j] + rev_cond - fwd_cond;
                    let accept = if log_ratio < 0.0 { math::exp(log_ratio) } else { 1.0 };
                    scan_weight * math::exp(fwd_cond) * accept
                } else {
                    scan_weight * math::exp(fwd_cond)
                };
                data[i * s + j] += p;
                off_total += p;
            }
        }
        // Unadjusted: the proposal never stays put, so the diagonal is
        // exactly 0 and off_total is exactly 1 up to rounding. Adjusted:
        // rejected mass accumulates on the diagonal.
        if adjusted {
            data[i * s + i] = 1.0 - off_total;
        }
    }
    TransitionMatrix::new(s, data)
}

fn rwm_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    space: &StateSpace,
    adjusted: bool,
) -> Result<TransitionMatrix> {
    let s = space.size();
    let n = space.positions();
    let k = space.table().len();
    let energies = space.energies(model)?;
    let q = 1.0 / (n * (k - 1)) as f64;

    let mut data = vec![0.0; s * s];
    for i in 0..s {
        let tokens = space.tokens_of(i);
        let mut off_total = 0.0;
        for pos in 0..n {
            for v in 0..k {
                if v == tokens[pos] {
                    continue;
                }
                let mut t = tokens.clone();
                t[pos] = v;
                let j = space.index_of(&t)?;
                let p = if adjusted {
                    let log_ratio = energies[i] - energies[j];
                    let accept = if log_ratio < 0.0 { math::exp(log_ratio) } else { 1.0 };
                    q * accept
                } else {
                    q
                };
                data[i * s + j] += p;
                off_total += p;
            }
        }
        if adjusted {
            data[i * s + i] = 1.0 - off_total;
        }
    }
    TransitionMatrix::new(s, data)
}

/// Exact transition matrix of the projected Langevin kernel.
///
/// Requires exactly two tokens with scalar embeddings: then each coordinate
/// of the Langevin update `y_n ~ Normal(x_n - (alpha/2) g_n, alpha)` projects
/// independently, and the probability of landing on a given token is a normal
/// CDF evaluated at the embedding midpoint. Any other vocabulary raises
/// [`Error::InfeasibleIntegral`] — the crossing probability of a general
/// Voronoi cell has no closed form.
pub fn mucola_exact_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    space: &StateSpace,
    cfg: &MucolaConfig,
) -> Result<TransitionMatrix> {
    space.check_model(model)?;
    MucolaConfig::new(cfg.step_size)?;
    let table = space.table();
    if table.len() != 2 || table.dim() != 1 {
        return Err(Error::InfeasibleIntegral {
            tokens: table.len(),
            dim: table.dim(),
        });
    }
    let v0 = table.vector(0)[0];
    let v1 = table.vector(1)[0];
    let mid = 0.5 * (v0 + v1);
    let sigma = math::sqrt(cfg.step_size);

    let s = space.size();
    let n = space.positions();
    let mut data = vec![0.0; s * s];
    let mut p_token0 = vec![0.0; n];
    let mut p_token1 = vec![0.0; n];
    for i in 0..s {
        let state = space.state_of(i);
        let grad = model.gradient(state.embedding());
        for pos in 0..n {
            let mean = state.embedding()[pos] - 0.5 * cfg.step_size * grad[pos];
            // Each projection probability gets its own one-sided CDF
            // evaluation: the complement `1 - cdf` of a value that rounds
            // to 1 would turn the other tail into an exact zero and
            // disconnect the chain at small step sizes.
            let z = (mid - mean) / sigma;
            let below = math::normal_cdf(z);
            let above = math::normal_cdf(-z);
            if v0 < v1 {
                p_token0[pos] = below;
                p_token1[pos] = above;
            } else {
                p_token0[pos] = above;
                p_token1[pos] = below;
            }
        }
        for j in 0..s {
            let tokens = space.tokens_of(j);
            let mut p = 1.0;
            for pos in 0..n {
                p *= if tokens[pos] == 0 {
                    p_token0[pos]
                } else {
                    p_token1[pos]
                };
            }
            data[i * s + j] = p;
        }
    }
    TransitionMatrix::new(s, data)
}
