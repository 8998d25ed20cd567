//! Exact long-run laws of each kernel against the model's own law.
//!
//! For every step size in the configured grid this command compares, in
//! closed form with no sampling at all:
//!
//! - `mucola` — the stationary law of the projection kernel's exact
//!   transition matrix. Strictly positive total variation at every step
//!   size: the projected Langevin step has no Metropolis correction and
//!   targets a deformed law.
//! - `pncg_unadjusted` — the closed-form reversing law of the uncorrected
//!   all-position gradient kernel; its distance to the target shrinks to 0
//!   as the step size does.
//! - `pncg_mh`, `gwl_mh`, `rwm_mh` — stationary laws of the
//!   Metropolis-corrected kernels, which match the target to within rounding
//!   at every step size.
//!
//! The corrected kernels are reversible, so their stationary laws come from
//! detailed-balance ratios — exact even at step sizes small enough to freeze
//! the chain. The projection kernel is not reversible and gets the
//! repeated-squaring route instead.

use gradmcmc::exact::{
    build_transition_matrix, exact_target, pi_alpha, reversible_stationary, stationary_by_power,
    tv_distance, DistributionVector, MatrixKernel, StateSpace, TransitionMatrix,
};
use gradmcmc::samplers::{GwlConfig, MucolaConfig, PncgConfig, ScanOrder};

use crate::commands::{enumerate, Invocation, Model};
use crate::config::ExperimentConfig;
use crate::error::{classify, CliError};
use crate::output::{csv_header, fmt_f64, OutputDir};

/// Runs the command; returns the artifact paths written.
pub fn run(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<String>, CliError> {
    let model = cfg.model.build()?;
    let space = enumerate(&model, inv.cap)?;
    let target = exact_target(&model, &space).map_err(classify)?;
    let p = cfg.kernel.norm_exponent;

    let mut csv = csv_header("toy-limit");
    csv.push_str("kernel,alpha,tv_to_target\n");
    for &alpha in &cfg.alphas {
        push_row(&mut csv, "mucola", alpha, mucola_tv(&model, &space, &target, alpha)?);
    }
    for &alpha in &cfg.alphas {
        let smoothed = pi_alpha(
            &model,
            &space,
            &PncgConfig::new(alpha, p).map_err(classify)?,
        )
        .map_err(classify)?;
        let tv = tv_distance(&smoothed, &target).map_err(classify)?;
        push_row(&mut csv, "pncg_unadjusted", alpha, tv);
    }
    for &alpha in &cfg.alphas {
        let kernel = MatrixKernel::Pncg {
            cfg: PncgConfig::new(alpha, p).map_err(classify)?,
            adjusted: true,
        };
        let tv = stationary_tv(&kernel, &model, &space, &target, reversible_stationary)?;
        push_row(&mut csv, "pncg_mh", alpha, tv);
    }
    for &alpha in &cfg.alphas {
        let kernel = MatrixKernel::GwlRandomScan {
            cfg: GwlConfig::new(alpha, p, ScanOrder::Random).map_err(classify)?,
            adjusted: true,
        };
        let tv = stationary_tv(&kernel, &model, &space, &target, reversible_stationary)?;
        push_row(&mut csv, "gwl_mh", alpha, tv);
    }
    // The uniform-replacement kernel takes no step size; its row repeats so
    // the table stays rectangular over the grid.
    for &alpha in &cfg.alphas {
        let kernel = MatrixKernel::Rwm { adjusted: true };
        let tv = stationary_tv(&kernel, &model, &space, &target, reversible_stationary)?;
        push_row(&mut csv, "rwm_mh", alpha, tv);
    }

    let mut out = OutputDir::create(&inv.out)?;
    let path = out.write_atomic("toy_limit.csv", csv.as_bytes())?;
    Ok(vec![path.display().to_string()])
}

fn push_row(csv: &mut String, kernel: &str, alpha: f64, tv: f64) {
    csv.push_str(&format!("{kernel},{},{}\n", fmt_f64(alpha), fmt_f64(tv)));
}

/// Row-agreement threshold for the repeated-squaring solver on the
/// projection kernel; its emitted distances sit far above this.
const POWER_TOL: f64 = 1e-13;

fn mucola_tv(
    model: &Model,
    space: &StateSpace,
    target: &DistributionVector,
    alpha: f64,
) -> Result<f64, CliError> {
    let kernel = MatrixKernel::Mucola {
        cfg: MucolaConfig::new(alpha).map_err(classify)?,
    };
    stationary_tv(&kernel, model, space, target, |m| {
        stationary_by_power(m, POWER_TOL)
    })
}

fn stationary_tv(
    kernel: &MatrixKernel,
    model: &Model,
    space: &StateSpace,
    target: &DistributionVector,
    solve: impl Fn(&TransitionMatrix) -> gradmcmc::Result<DistributionVector>,
) -> Result<f64, CliError> {
    let matrix = build_transition_matrix(kernel, model, space).map_err(classify)?;
    let stationary = solve(&matrix).map_err(classify)?;
    tv_distance(&stationary, target).map_err(classify)
}
