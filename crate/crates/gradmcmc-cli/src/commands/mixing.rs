//! Mixing-time analysis of the unadjusted all-position gradient kernel.
//!
//! For every (step size, threshold) pair in the config this emits one JSON
//! report: the exact worst-case mixing time (or the cap it ran into), the
//! closed-form peakedness lower bound with all of its ingredients, the
//! spectral-gap bracket, and whether every eigenvalue of the transition
//! matrix sits inside the union of its Gershgorin discs. The bound and the
//! eigenvalue quantities come straight from the exact transition matrix, so
//! the report involves no sampling.

use serde::Serialize;

use gradmcmc::exact::{
    build_transition_matrix, gershgorin_check, mixing_time_lower_bound, MatrixKernel, MixingTime,
};
use gradmcmc::samplers::PncgConfig;

use crate::commands::{enumerate, Invocation};
use crate::config::ExperimentConfig;
use crate::error::{classify, CliError};
use crate::output::{OutputDir, TOOL_VERSION};

/// Top-level JSON document: tool stamp plus one report per grid point.
#[derive(Serialize)]
struct MixingDocument {
    tool_version: &'static str,
    schema: &'static str,
    reports: Vec<MixingEntry>,
}

/// Exact and bound-side mixing quantities for one (step size, threshold).
#[derive(Serialize)]
struct MixingEntry {
    step_size: f64,
    norm_exponent: f64,
    epsilon: f64,
    mixing_time: MixingTimeJson,
    lower_bound: f64,
    c1: f64,
    c2: f64,
    z_shifted: f64,
    quad_form_min_eig: f64,
    min_sq_distance: f64,
    min_pnorm_distance: f64,
    spectral_gap: f64,
    lambda_2: f64,
    stationary_min: f64,
    levin_lower: f64,
    levin_upper: f64,
    gershgorin_all_contained: bool,
}

/// Either the exact worst-case mixing time or the cap the search hit.
#[derive(Serialize)]
struct MixingTimeJson {
    kind: &'static str,
    steps: usize,
}

impl From<MixingTime> for MixingTimeJson {
    fn from(t: MixingTime) -> Self {
        match t {
            MixingTime::Exact(steps) => MixingTimeJson {
                kind: "exact",
                steps,
            },
            MixingTime::AtLeast(steps) => MixingTimeJson {
                kind: "at_least",
                steps,
            },
        }
    }
}

/// Runs the command; returns the artifact paths written.
pub fn run(cfg: &ExperimentConfig, inv: &Invocation) -> Result<Vec<String>, CliError> {
    let model = cfg.model.build()?;
    let space = enumerate(&model, inv.cap)?;
    let p = cfg.kernel.norm_exponent;

    let mut reports = Vec::with_capacity(cfg.alphas.len() * cfg.epsilons.len());
    for &alpha in &cfg.alphas {
        let pncg = PncgConfig::new(alpha, p).map_err(classify)?;
        // One matrix per step size serves every threshold.
        let matrix = build_transition_matrix(
            &MatrixKernel::Pncg {
                cfg: pncg,
                adjusted: false,
            },
            &model,
            &space,
        )
        .map_err(classify)?;
        let discs = gershgorin_check(&matrix).map_err(classify)?;
        for &epsilon in &cfg.epsilons {
            let report = mixing_time_lower_bound(&model, &space, &pncg, epsilon, cfg.step_cap)
                .map_err(classify)?;
            reports.push(MixingEntry {
                step_size: report.step_size,
                norm_exponent: report.norm_exponent,
                epsilon: report.epsilon,
                mixing_time: report.mixing_time.into(),
                lower_bound: report.lower_bound,
                c1: report.c1,
                c2: report.c2,
                z_shifted: report.z_shifted,
                quad_form_min_eig: report.quad_form_min_eig,
                min_sq_distance: report.min_sq_distance,
                min_pnorm_distance: report.min_pnorm_distance,
                spectral_gap: report.spectral_gap,
                lambda_2: report.lambda_2,
                stationary_min: report.stationary_min,
                levin_lower: report.levin_lower,
                levin_upper: report.levin_upper,
                gershgorin_all_contained: discs.all_contained,
            });
        }
    }

    let document = MixingDocument {
        tool_version: TOOL_VERSION,
        schema: "mixing-report v1",
        reports,
    };
    let mut body = serde_json::to_string_pretty(&document)
        .map_err(|e| CliError::Runtime(format!("serializing mixing report: {e}")))?;
    body.push('\n');

    let mut out = OutputDir::create(&inv.out)?;
    let path = out.write_atomic("mixing_report.json", body.as_bytes())?;
    Ok(vec![path.display().to_string()])
}
