//! Declarative experiment configuration: strict JSON parsing and validation.
//!
//! A configuration is a single JSON object. Every key is optional — absent
//! keys fall back to the built-in five-site cycle preset — but present keys
//! are checked strictly: unknown keys are rejected by name, numbers must be
//! in range, and the model is trial-built before any command runs, so a bad
//! config always fails fast with exit code 2 and an actionable message.
//!
//! Schema (`presets/toy.json` is a worked example):
//!
//! ```json
//! {
//!   "model":       { "type": "log_quadratic", "beta": 0.42,
//!                    "J": {"cycle": 5} or [row-major numbers],
//!                    "b": [numbers], "embeddings": [[numbers], ...] },
//!   "kernel":      { "name": "pncg|gwl|rwm|mucola|hybrid",
//!                    "step_size": 1.0, "norm_exponent": 2.0,
//!                    "scan": "random|systematic",
//!                    "hybrid": { "window": 100, "change_threshold": 1.0,
//!                                "max_initial_steps": 10000 } },
//!   "steps":       500000,
//!   "burn_in":     50000,
//!   "seeds":       [1, 2, 3],
//!   "out":         "out",
//!   "alphas":      [2.0, 1.0, 0.5, 0.1, 0.01],
//!   "epsilons":    [0.25],
//!   "step_cap":    50000,
//!   "checkpoints": [10, 100, 1000],
//!   "cap":         1000000,
//!   "documentation": { ...ignored... }
//! }
//! ```
//!
//! `"documentation"` is accepted and ignored wholesale; the shipped preset
//! uses it to record reference settings (e.g. the Voronoi-measure sampler's
//! trajectory length) that map to no kernel here.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::{Map, Value};

use gradmcmc::energy::{
    cycle_coupling, CompositeEnergy, EmbeddingTable, EnergyModel, LogQuadraticEnergy,
};
use gradmcmc::exact::DEFAULT_STATE_CAP;
use gradmcmc::samplers::{GwlConfig, HybridConfig, MucolaConfig, PncgConfig, ScanOrder};

use crate::error::{config_err, CliError};

/// The built-in experiment definition: five-site cycle, two scalar tokens.
pub const TOY_PRESET: &str = include_str!("../presets/toy.json");

/// Fallback step count for the convergence-curve command.
pub const DEFAULT_TV_STEPS: usize = 500_000;

/// Fallback step count for free-form chain runs.
pub const DEFAULT_CHAIN_STEPS: usize = 10_000;

/// Fallback cap on the exact mixing-time search.
pub const DEFAULT_STEP_CAP: usize = 50_000;

/// A fully validated experiment definition.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Energy model to sample from and analyse.
    pub model: ModelSpec,
    /// Kernel for free-form chain runs.
    pub kernel: KernelSpec,
    /// Transition count per chain; commands fall back to their own default.
    pub steps: Option<usize>,
    /// Trace entries dropped before summarising; default is one tenth.
    pub burn_in: Option<usize>,
    /// Seeds to run when the `--seed` flag is not given.
    pub seeds: Vec<u64>,
    /// Output directory when the `--out` flag is not given.
    pub out: Option<PathBuf>,
    /// Step-size grid for the exact-law and mixing commands.
    pub alphas: Vec<f64>,
    /// Total-variation thresholds for the mixing command.
    pub epsilons: Vec<f64>,
    /// Cap on the exact mixing-time search.
    pub step_cap: usize,
    /// Trace checkpoints for convergence curves; default is a 1-2-5 ladder.
    pub checkpoints: Option<Vec<usize>>,
    /// State-enumeration cap when the `--cap` flag is not given.
    pub cap: u128,
}

/// Energy-model definition, buildable any number of times.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// `U(x) = -beta (x'Jx / 2 + b'x)` over embedded token sequences.
    LogQuadratic {
        beta: f64,
        coupling: CouplingSpec,
        bias: Option<Vec<f64>>,
        embeddings: Vec<Vec<f64>>,
    },
    /// Weighted sum of component models sharing one embedding table.
    Composite { terms: Vec<(ModelSpec, f64)> },
}

/// Coupling matrix: the ferromagnetic cycle shorthand or explicit entries.
#[derive(Debug, Clone)]
pub enum CouplingSpec {
    /// Nearest-neighbour cycle over this many positions.
    Cycle(usize),
    /// Dense row-major entries; the side length fixes the position count.
    Dense(Vec<f64>),
}

/// Kernel selection with resolved parameters.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub name: KernelName,
    pub step_size: f64,
    pub norm_exponent: f64,
    pub scan: ScanOrder,
    pub hybrid: HybridConfig,
}

/// The five runnable kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelName {
    Pncg,
    Gwl,
    Rwm,
    Mucola,
    Hybrid,
}

impl KernelName {
    /// Stable identifier used in filenames, CSV cells, and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Pncg => "pncg",
            KernelName::Gwl => "gwl",
            KernelName::Rwm => "rwm",
            KernelName::Mucola => "mucola",
            KernelName::Hybrid => "hybrid",
        }
    }

    fn parse(s: &str, context: &str) -> Result<Self, CliError> {
        match s {
            "pncg" => Ok(KernelName::Pncg),
            "gwl" => Ok(KernelName::Gwl),
            "rwm" => Ok(KernelName::Rwm),
            "mucola" => Ok(KernelName::Mucola),
            "hybrid" => Ok(KernelName::Hybrid),
            other => Err(CliError::Config(format!(
                "{context} must be one of pncg, gwl, rwm, mucola, hybrid; got \"{other}\""
            ))),
        }
    }

    /// Conventional step size when the config does not set one: 1.5 for the
    /// projection kernel, 1.0 for the gradient proposals.
    fn default_step_size(self) -> f64 {
        match self {
            KernelName::Mucola => MucolaConfig::default().step_size,
            _ => PncgConfig::default().step_size,
        }
    }
}

impl ModelSpec {
    /// Constructs the energy model, classifying failures as config errors.
    pub fn build(&self) -> Result<Box<dyn EnergyModel>, CliError> {
        match self {
            ModelSpec::LogQuadratic {
                beta,
                coupling,
                bias,
                embeddings,
            } => {
                let table = EmbeddingTable::new(embeddings.clone()).map_err(config_err)?;
                let block = table.dim();
                let (positions, coupling) = match coupling {
                    CouplingSpec::Cycle(n) => (*n, cycle_coupling(*n, block)),
                    CouplingSpec::Dense(entries) => {
                        let side = entries.len().isqrt();
                        if side * side != entries.len() {
                            return Err(CliError::Config(format!(
                                "model.J has {} entries, which is not a square count; \
                                 a dense coupling must list d*d row-major entries",
                                entries.len()
                            )));
                        }
                        if side == 0 || side % block != 0 {
                            return Err(CliError::Config(format!(
                                "model.J is {side}x{side} but each position occupies \
                                 {block} coordinates; the side length must be a \
                                 positive multiple of the embedding dimension"
                            )));
                        }
                        (side / block, entries.clone())
                    }
                };
                let d = positions * block;
                let bias = match bias {
                    Some(b) => b.clone(),
                    None => vec![0.0; d],
                };
                let model = LogQuadraticEnergy::new(table, positions, coupling, bias, *beta)
                    .map_err(config_err)?;
                Ok(Box::new(model))
            }
            ModelSpec::Composite { terms } => {
                let built = terms
                    .iter()
                    .map(|(spec, weight)| Ok((spec.build()?, *weight)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                let model = CompositeEnergy::new(built).map_err(config_err)?;
                Ok(Box::new(model))
            }
        }
    }
}

/// Parses and fully validates a configuration document.
///
/// `origin` names the source (a path or "built-in preset") in messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("{origin}: not valid JSON: {e}")))?;
    let map = expect_object(&root, origin)?;
    let mut w = Walker::new(map, origin);

    let model = match w.take("model") {
        Some(v) => parse_model(v, &format!("{origin}: model"))?,
        None => default_model(),
    };
    let kernel = match w.take("kernel") {
        Some(v) => parse_kernel(v, &format!("{origin}: kernel"))?,
        None => default_kernel(),
    };
    let steps = w
        .take("steps")
        .map(|v| positive_count(v, &format!("{origin}: steps")))
        .transpose()?;
    let burn_in = w
        .take("burn_in")
        .map(|v| count(v, &format!("{origin}: burn_in")))
        .transpose()?;
    let seeds = match w.take("seeds") {
        Some(v) => parse_seeds(v, &format!("{origin}: seeds"))?,
        None => vec![1, 2, 3],
    };
    let out = w
        .take("out")
        .map(|v| Ok::<_, CliError>(PathBuf::from(string(v, &format!("{origin}: out"))?)))
        .transpose()?;
    let alphas = match w.take("alphas") {
        Some(v) => parse_alphas(v, &format!("{origin}: alphas"))?,
        None => vec![2.0, 1.0, 0.5, 0.1, 0.01],
    };
    let epsilons = match w.take("epsilons") {
        Some(v) => parse_epsilons(v, &format!("{origin}: epsilons"))?,
        None => vec![0.25],
    };
    let step_cap = match w.take("step_cap") {
        Some(v) => positive_count(v, &format!("{origin}: step_cap"))?,
        None => DEFAULT_STEP_CAP,
    };
    let checkpoints = w
        .take("checkpoints")
        .map(|v| parse_checkpoints(v, &format!("{origin}: checkpoints")))
        .transpose()?;
    let cap = match w.take("cap") {
        Some(v) => {
            let n = positive_count(v, &format!("{origin}: cap"))?;
            n as u128
        }
        None => DEFAULT_STATE_CAP,
    };
    // Free-form notes travel with the config but drive nothing.
    w.take("documentation");
    w.finish()?;

    let cfg = ExperimentConfig {
        model,
        kernel,
        steps,
        burn_in,
        seeds,
        out,
        alphas,
        epsilons,
        step_cap,
        checkpoints,
        cap,
    };
    cfg.validate(origin)?;
    Ok(cfg)
}

/// The shipped preset, parsed; infallible by construction (covered by tests).
pub fn preset_config() -> ExperimentConfig {
    parse_config(TOY_PRESET, "built-in preset").expect("shipped preset must be valid")
}

impl ExperimentConfig {
    /// Cross-field checks plus a trial model build, so every parameter
    /// problem is caught before any command starts computing.
    fn validate(&self, origin: &str) -> Result<(), CliError> {
        self.model.build()?;
        // Kernel parameters are checked by the library constructors; run
        // them all here so a chain config fails at load time.
        PncgConfig::new(self.kernel.step_size, self.kernel.norm_exponent)
            .map_err(|e| CliError::Config(format!("{origin}: kernel: {e}")))?;
        GwlConfig::new(
            self.kernel.step_size,
            self.kernel.norm_exponent,
            self.kernel.scan,
        )
        .map_err(|e| CliError::Config(format!("{origin}: kernel: {e}")))?;
        HybridConfig::new(
            self.kernel.hybrid.window,
            self.kernel.hybrid.change_threshold,
            self.kernel.hybrid.max_initial_steps,
        )
        .map_err(|e| CliError::Config(format!("{origin}: kernel.hybrid: {e}")))?;
        let mut seen = BTreeSet::new();
        for &s in &self.seeds {
            if !seen.insert(s) {
                return Err(CliError::Config(format!(
                    "{origin}: seeds: seed {s} listed twice; outputs are keyed by seed"
                )));
            }
        }
        if let (Some(cps), Some(steps)) = (&self.checkpoints, self.steps) {
            if cps.last().is_some_and(|&last| last > steps) {
                return Err(CliError::Config(format!(
                    "{origin}: checkpoints: last checkpoint {} exceeds steps {}",
                    cps.last().unwrap(),
                    steps
                )));
            }
        }
        Ok(())
    }

    /// Step count for the convergence-curve command.
    pub fn tv_steps(&self) -> usize {
        self.steps.unwrap_or(DEFAULT_TV_STEPS)
    }

    /// Step count for free-form chain runs.
    pub fn chain_steps(&self) -> usize {
        self.steps.unwrap_or(DEFAULT_CHAIN_STEPS)
    }
}

fn default_model() -> ModelSpec {
    ModelSpec::LogQuadratic {
        beta: 0.42,
        coupling: CouplingSpec::Cycle(5),
        bias: None,
        embeddings: vec![vec![-1.0], vec![1.0]],
    }
}

fn default_kernel() -> KernelSpec {
    let pncg = PncgConfig::default();
    KernelSpec {
        name: KernelName::Pncg,
        step_size: pncg.step_size,
        norm_exponent: pncg.norm_exponent,
        scan: ScanOrder::Random,
        hybrid: HybridConfig::default(),
    }
}

fn parse_model(v: &Value, context: &str) -> Result<ModelSpec, CliError> {
    let map = expect_object(v, context)?;
    let mut w = Walker::new(map, context);
    let ty = match w.take("type") {
        Some(t) => string(t, &format!("{context}.type"))?,
        None => {
            return Err(CliError::Config(format!(
                "{context}: missing \"type\" (log_quadratic or composite)"
            )))
        }
    };
    let spec = match ty.as_str() {
        "log_quadratic" => {
            let beta = match w.take("beta") {
                Some(b) => number(b, &format!("{context}.beta"))?,
                None => {
                    return Err(CliError::Config(format!(
                        "{context}: log_quadratic needs \"beta\" (inverse temperature)"
                    )))
                }
            };
            let coupling = match w.take("J") {
                Some(j) => parse_coupling(j, &format!("{context}.J"))?,
                None => {
                    return Err(CliError::Config(format!(
                        "{context}: log_quadratic needs \"J\" \
                         ({{\"cycle\": N}} or a row-major array)"
                    )))
                }
            };
            let bias = w
                .take("b")
                .map(|b| number_array(b, &format!("{context}.b")))
                .transpose()?;
            let embeddings = match w.take("embeddings") {
                Some(e) => parse_embeddings(e, &format!("{context}.embeddings"))?,
                None => vec![vec![-1.0], vec![1.0]],
            };
            ModelSpec::LogQuadratic {
                beta,
                coupling,
                bias,
                embeddings,
            }
        }
        "composite" => {
            let terms_value = w.take("terms").ok_or_else(|| {
                CliError::Config(format!(
                    "{context}: composite needs \"terms\" (array of {{weight, model}})"
                ))
            })?;
            let items = array(terms_value, &format!("{context}.terms"))?;
            if items.is_empty() {
                return Err(CliError::Config(format!(
                    "{context}.terms must not be empty"
                )));
            }
            let mut terms = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let term_ctx = format!("{context}.terms[{i}]");
                let term_map = expect_object(item, &term_ctx)?;
                let mut tw = Walker::new(term_map, &term_ctx);
                let weight = match tw.take("weight") {
                    Some(x) => number(x, &format!("{term_ctx}.weight"))?,
                    None => 1.0,
                };
                let inner = tw.take("model").ok_or_else(|| {
                    CliError::Config(format!("{term_ctx}: missing \"model\""))
                })?;
                let spec = parse_model(inner, &format!("{term_ctx}.model"))?;
                tw.finish()?;
                terms.push((spec, weight));
            }
            ModelSpec::Composite { terms }
        }
        other => {
            return Err(CliError::Config(format!(
                "{context}.type must be \"log_quadratic\" or \"composite\", got \"{other}\""
            )))
        }
    };
    w.finish()?;
    Ok(spec)
}

fn parse_coupling(v: &Value, context: &str) -> Result<CouplingSpec, CliError> {
    match v {
        Value::Object(map) => {
            let mut w = Walker::new(map, context);
            let n = match w.take("cycle") {
                Some(c) => positive_count(c, &format!("{context}.cycle"))?,
                None => {
                    return Err(CliError::Config(format!(
                        "{context}: coupling object must be {{\"cycle\": N}}"
                    )))
                }
            };
            w.finish()?;
            if n < 3 {
                return Err(CliError::Config(format!(
                    "{context}.cycle needs at least 3 positions, got {n}"
                )));
            }
            Ok(CouplingSpec::Cycle(n))
        }
        Value::Array(items) => {
            if items.iter().any(Value::is_array) {
                return Err(CliError::Config(format!(
                    "{context} must be a flat row-major array of numbers; \
                     flatten the rows into one list"
                )));
            }
            Ok(CouplingSpec::Dense(number_array(v, context)?))
        }
        _ => Err(CliError::Config(format!(
            "{context} must be {{\"cycle\": N}} or a row-major number array"
        ))),
    }
}

fn parse_embeddings(v: &Value, context: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let rows = array(v, context)?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| number_array(row, &format!("{context}[{i}]")))
        .collect()
}

fn parse_kernel(v: &Value, context: &str) -> Result<KernelSpec, CliError> {
    let map = expect_object(v, context)?;
    let mut w = Walker::new(map, context);
    let name = match w.take("name") {
        Some(n) => KernelName::parse(&string(n, &format!("{context}.name"))?, &format!("{context}.name"))?,
        None => KernelName::Pncg,
    };
    let step_size = match w.take("step_size") {
        Some(s) => {
            let x = number(s, &format!("{context}.step_size"))?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::Config(format!(
                    "{context}.step_size must be positive and finite, got {x}"
                )));
            }
            x
        }
        None => name.default_step_size(),
    };
    let norm_exponent = match w.take("norm_exponent") {
        Some(p) => {
            let x = number(p, &format!("{context}.norm_exponent"))?;
            if !(x >= 1.0 && x.is_finite()) {
                return Err(CliError::Config(format!(
                    "{context}.norm_exponent must be at least 1 and finite, got {x}"
                )));
            }
            x
        }
        None => PncgConfig::default().norm_exponent,
    };
    let scan = match w.take("scan") {
        Some(s) => match string(s, &format!("{context}.scan"))?.as_str() {
            "random" => ScanOrder::Random,
            "systematic" => ScanOrder::Systematic,
            other => {
                return Err(CliError::Config(format!(
                    "{context}.scan must be \"random\" or \"systematic\", got \"{other}\""
                )))
            }
        },
        None => ScanOrder::Random,
    };
    let hybrid = match w.take("hybrid") {
        Some(h) => parse_hybrid(h, &format!("{context}.hybrid"))?,
        None => HybridConfig::default(),
    };
    w.finish()?;
    Ok(KernelSpec {
        name,
        step_size,
        norm_exponent,
        scan,
        hybrid,
    })
}

fn parse_hybrid(v: &Value, context: &str) -> Result<HybridConfig, CliError> {
    let map = expect_object(v, context)?;
    let mut w = Walker::new(map, context);
    let defaults = HybridConfig::default();
    let window = match w.take("window") {
        Some(x) => positive_count(x, &format!("{context}.window"))?,
        None => defaults.window,
    };
    let change_threshold = match w.take("change_threshold") {
        Some(x) => number(x, &format!("{context}.change_threshold"))?,
        None => defaults.change_threshold,
    };
    let max_initial_steps = match w.take("max_initial_steps") {
        Some(x) => positive_count(x, &format!("{context}.max_initial_steps"))?,
        None => defaults.max_initial_steps,
    };
    w.finish()?;
    HybridConfig::new(window, change_threshold, max_initial_steps)
        .map_err(|e| CliError::Config(format!("{context}: {e}")))
}

fn parse_seeds(v: &Value, context: &str) -> Result<Vec<u64>, CliError> {
    let items = array(v, context)?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{context} must not be empty")));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            item.as_u64().ok_or_else(|| {
                CliError::Config(format!(
                    "{context}[{i}] must be a non-negative integer, got {item}"
                ))
            })
        })
        .collect()
}

fn parse_alphas(v: &Value, context: &str) -> Result<Vec<f64>, CliError> {
    let values = number_array(v, context)?;
    if values.is_empty() {
        return Err(CliError::Config(format!("{context} must not be empty")));
    }
    for &a in &values {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CliError::Config(format!(
                "{context}: step size must be positive and finite, got {a}"
            )));
        }
    }
    Ok(values)
}

fn parse_epsilons(v: &Value, context: &str) -> Result<Vec<f64>, CliError> {
    let values = number_array(v, context)?;
    if values.is_empty() {
        return Err(CliError::Config(format!("{context} must not be empty")));
    }
    for &e in &values {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Config(format!(
                "{context}: threshold must lie strictly between 0 and 1, got {e}"
            )));
        }
    }
    Ok(values)
}

fn parse_checkpoints(v: &Value, context: &str) -> Result<Vec<usize>, CliError> {
    let items = array(v, context)?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{context} must not be empty")));
    }
    let values = items
        .iter()
        .enumerate()
        .map(|(i, item)| count(item, &format!("{context}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err(CliError::Config(format!(
                "{context} must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(values)
}

/// Logarithmic 1-2-5 checkpoint ladder from 10 up to and including `steps`.
pub fn default_checkpoints(steps: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut decade = 10usize;
    loop {
        for multiplier in [1, 2, 5] {
            match decade.checked_mul(multiplier) {
                Some(v) if v <= steps => points.push(v),
                _ => {}
            }
        }
        match decade.checked_mul(10) {
            Some(next) if next <= steps => decade = next,
            _ => break,
        }
    }
    if points.last() != Some(&steps) {
        points.push(steps);
    }
    points
}

/// Tracks which keys of a JSON object were consumed so leftovers can be
/// rejected by name, with the list of keys that would have been accepted.
struct Walker<'a> {
    map: &'a Map<String, Value>,
    context: String,
    known: Vec<&'static str>,
}

impl<'a> Walker<'a> {
    fn new(map: &'a Map<String, Value>, context: &str) -> Self {
        Self {
            map,
            context: context.to_owned(),
            known: Vec::new(),
        }
    }

    fn take(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.map.get(key)
    }

    fn finish(self) -> Result<(), CliError> {
        for key in self.map.keys() {
            if !self.known.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown key \"{key}\" in {}; accepted keys: {}",
                    self.context,
                    self.known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

fn expect_object<'a>(v: &'a Value, context: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object()
        .ok_or_else(|| CliError::Config(format!("{context} must be a JSON object")))
}

fn array<'a>(v: &'a Value, context: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::Config(format!("{context} must be a JSON array")))
}

fn string(v: &Value, context: &str) -> Result<String, CliError> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| CliError::Config(format!("{context} must be a string")))
}

fn number(v: &Value, context: &str) -> Result<f64, CliError> {
    v.as_f64()
        .ok_or_else(|| CliError::Config(format!("{context} must be a number")))
}

fn number_array(v: &Value, context: &str) -> Result<Vec<f64>, CliError> {
    array(v, context)?
        .iter()
        .enumerate()
        .map(|(i, item)| number(item, &format!("{context}[{i}]")))
        .collect()
}

/// A non-negative integer (JSON numbers only; no strings, no fractions).
fn count(v: &Value, context: &str) -> Result<usize, CliError> {
    match v.as_u64() {
        Some(n) => Ok(n as usize),
        None => Err(CliError::Config(format!(
            "{context} must be a non-negative integer, got {v}"
        ))),
    }
}

/// An integer that must be at least 1.
fn positive_count(v: &Value, context: &str) -> Result<usize, CliError> {
    let n = count(v, context)?;
    if n < 1 {
        return Err(CliError::Config(format!(
            "{context} must be at least 1, got {n}"
        )));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parses_and_matches_the_documented_toy() {
        let cfg = preset_config();
        match &cfg.model {
            ModelSpec::LogQuadratic {
                beta,
                coupling,
                bias,
                embeddings,
            } => {
                assert_eq!(*beta, 0.42);
                assert!(matches!(coupling, CouplingSpec::Cycle(5)));
                assert!(bias.is_none());
                assert_eq!(embeddings, &vec![vec![-1.0], vec![1.0]]);
            }
            other => panic!("preset model should be log-quadratic, got {other:?}"),
        }
        assert_eq!(cfg.kernel.name, KernelName::Pncg);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.alphas, vec![2.0, 1.0, 0.5, 0.1, 0.01]);
        assert_eq!(cfg.epsilons, vec![0.25]);
        let model = cfg.model.build().unwrap();
        assert_eq!(model.positions(), 5);
        assert_eq!(model.table().len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = parse_config(r#"{"stepz": 5}"#, "cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key \"stepz\""), "{msg}");
        assert!(msg.contains("accepted keys"), "{msg}");
        assert_eq!(err.exit_code(), 2);

        let nested = parse_config(
            r#"{"kernel": {"name": "rwm", "stride": 2}}"#,
            "cfg",
        )
        .unwrap_err();
        assert!(nested.to_string().contains("\"stride\""), "{nested}");
    }

    #[test]
    fn out_of_range_parameters_get_actionable_messages() {
        let alpha = parse_config(r#"{"kernel": {"step_size": -0.5}}"#, "cfg").unwrap_err();
        assert!(alpha.to_string().contains("step_size must be positive"), "{alpha}");

        let p = parse_config(r#"{"kernel": {"norm_exponent": 0.5}}"#, "cfg").unwrap_err();
        assert!(p.to_string().contains("at least 1"), "{p}");

        let steps = parse_config(r#"{"steps": 0}"#, "cfg").unwrap_err();
        assert!(steps.to_string().contains("steps must be at least 1"), "{steps}");

        let grid = parse_config(r#"{"alphas": [1.0, 0.0]}"#, "cfg").unwrap_err();
        assert!(grid.to_string().contains("positive and finite"), "{grid}");

        let eps = parse_config(r#"{"epsilons": [1.5]}"#, "cfg").unwrap_err();
        assert!(eps.to_string().contains("between 0 and 1"), "{eps}");
    }

    #[test]
    fn dense_coupling_must_be_flat_and_square() {
        let nested = parse_config(
            r#"{"model": {"type": "log_quadratic", "beta": 1.0, "J": [[0.0, 1.0], [1.0, 0.0]]}}"#,
            "cfg",
        )
        .unwrap_err();
        assert!(nested.to_string().contains("flatten"), "{nested}");

        let ragged = parse_config(
            r#"{"model": {"type": "log_quadratic", "beta": 1.0, "J": [0.0, 1.0, 1.0]}}"#,
            "cfg",
        )
        .unwrap_err();
        assert!(ragged.to_string().contains("not a square count"), "{ragged}");
    }

    #[test]
    fn dense_cycle_coupling_builds_the_same_model_as_the_shorthand() {
        let n = 5;
        let dense = cycle_coupling(n, 1);
        let rows: Vec<String> = dense.iter().map(|x| format!("{x}")).collect();
        let text = format!(
            r#"{{"model": {{"type": "log_quadratic", "beta": 0.42, "J": [{}]}}}}"#,
            rows.join(", ")
        );
        let from_dense = parse_config(&text, "cfg").unwrap().model.build().unwrap();
        let from_cycle = preset_config().model.build().unwrap();
        assert_eq!(from_dense.positions(), from_cycle.positions());
        let x = [1.0, 1.0, -1.0, 1.0, -1.0];
        assert_eq!(from_dense.energy(&x), from_cycle.energy(&x));
        assert_eq!(from_dense.gradient(&x), from_cycle.gradient(&x));
    }

    #[test]
    fn composite_terms_are_weighted() {
        let text = r#"{
            "model": {"type": "composite", "terms": [
                {"weight": 1.0, "model": {"type": "log_quadratic", "beta": 0.42, "J": {"cycle": 3}}},
                {"weight": 2.0, "model": {"type": "log_quadratic", "beta": 0.42, "J": {"cycle": 3}}}
            ]}
        }"#;
        let model = parse_config(text, "cfg").unwrap().model.build().unwrap();
        let single = parse_config(
            r#"{"model": {"type": "log_quadratic", "beta": 0.42, "J": {"cycle": 3}}}"#,
            "cfg",
        )
        .unwrap()
        .model
        .build()
        .unwrap();
        let x = [1.0, -1.0, 1.0];
        assert!((model.energy(&x) - 3.0 * single.energy(&x)).abs() < 1e-12);
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let err = parse_config(r#"{"seeds": [4, 4]}"#, "cfg").unwrap_err();
        assert!(err.to_string().contains("seed 4 listed twice"), "{err}");
    }

    #[test]
    fn checkpoint_ladder_is_increasing_and_ends_at_steps() {
        assert_eq!(default_checkpoints(7), vec![7]);
        assert_eq!(default_checkpoints(10), vec![10]);
        assert_eq!(
            default_checkpoints(1000),
            vec![10, 20, 50, 100, 200, 500, 1000]
        );
        let ladder = default_checkpoints(500_000);
        assert_eq!(ladder.first(), Some(&10));
        assert_eq!(ladder.last(), Some(&500_000));
        assert!(ladder.windows(2).all(|w| w[0] < w[1]));
    }
}
