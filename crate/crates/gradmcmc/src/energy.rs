//! Energy models over embedded token sequences.
//!
//! A sequence of `N` token indices embeds as the concatenation of per-token
//! embedding vectors, giving a point `x` in `R^{N*h}`. An [`EnergyModel`]
//! scores such points with an energy `U(x)`; the implied target distribution
//! over sequences is `pi(x) ∝ exp(-U(x))`. Models expose analytic gradients
//! (and, when available, a constant Hessian) so samplers and exact analyses
//! can exploit first- and second-order structure.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// The vocabulary: one fixed embedding vector per token.
///
/// All vectors share a dimension `h >= 1`, there are at least two tokens, and
/// vectors are pairwise distinct so nearest-vector projection is well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    flat: Vec<f64>,
    dim: usize,
    len: usize,
}

impl EmbeddingTable {
    /// Builds a table from one embedding vector per token.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::InvalidEmbeddingTable(format!(
                "need at least 2 tokens, got {}",
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidEmbeddingTable(String::from(
                "embedding dimension must be at least 1",
            )));
        }
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidEmbeddingTable(format!(
                    "token {k} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidEmbeddingTable(format!(
                    "token {k} has a non-finite coordinate"
                )));
            }
        }
        for a in 0..vectors.len() {
            for b in (a + 1)..vectors.len() {
                if vectors[a] == vectors[b] {
                    return Err(Error::InvalidEmbeddingTable(format!(
                        "tokens {a} and {b} share the same embedding vector"
                    )));
                }
            }
        }
        let len = vectors.len();
        let mut flat = Vec::with_capacity(len * dim);
        for v in &vectors {
            flat.extend_from_slice(v);
        }
        Ok(Self { flat, dim, len })
    }

    /// One-dimensional table from a list of scalar embedding values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    /// Number of tokens in the vocabulary.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: construction requires at least two tokens.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Embedding dimension `h` shared by every token.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Embedding vector of token `k`.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.flat[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of the token whose embedding is Euclidean-nearest to `point`.
    ///
    /// Exact distance ties resolve to the lowest token index: the comparison
    /// is strict, so a later token only wins by being strictly closer.
    pub fn nearest(&self, point: &[f64]) -> usize {
        debug_assert_eq!(point.len(), self.dim);
        let mut best = 0;
        let mut best_d = math::diff_sq_norm(self.vector(0), point);
        for k in 1..self.len {
            let d = math::diff_sq_norm(self.vector(k), point);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }
}

/// A sequence of token indices together with its cached flat embedding.
///
/// The cache is kept consistent by construction: tokens can only change via
/// [`SequenceState::set_token`], which rewrites the corresponding block.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceState {
    tokens: Vec<usize>,
    flat: Vec<f64>,
    dim: usize,
}

impl SequenceState {
    /// Builds a state from token indices, validating them against `table`.
    pub fn new(table: &EmbeddingTable, tokens: Vec<usize>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::InvalidParameter(String::from(
                "sequence must have at least one position",
            )));
        }
        let dim = table.dim();
        let mut flat = Vec::with_capacity(tokens.len() * dim);
        for &t in &tokens {
            if t >= table.len() {
                return Err(Error::TokenOutOfRange {
                    index: t,
                    table_size: table.len(),
                });
            }
            flat.extend_from_slice(table.vector(t));
        }
        Ok(Self { tokens, flat, dim })
    }

    /// Token indices, one per position.
    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    /// Number of positions `N`.
    pub fn positions(&self) -> usize {
        self.tokens.len()
    }

    /// Concatenated embedding vector of length `N * h`.
    pub fn embedding(&self) -> &[f64] {
        &self.flat
    }

    /// Embedding block of a single position.
    pub fn position_embedding(&self, pos: usize) -> &[f64] {
        &self.flat[pos * self.dim..(pos + 1) * self.dim]
    }

    /// Replaces the token at `pos`, updating the cached embedding block.
    pub fn set_token(&mut self, table: &EmbeddingTable, pos: usize, token: usize) -> Result<()> {
        if table.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "embedding table dimension vs. state",
                expected: self.dim,
                got: table.dim(),
            });
        }
        if pos >= self.tokens.len() {
            return Err(Error::InvalidParameter(format!(
                "position {pos} out of range for {} positions",
                self.tokens.len()
            )));
        }
        if token >= table.len() {
            return Err(Error::TokenOutOfRange {
                index: token,
                table_size: table.len(),
            });
        }
        self.tokens[pos] = token;
        self.flat[pos * self.dim..(pos + 1) * self.dim].copy_from_slice(table.vector(token));
        Ok(())
    }

    /// Number of positions where `self` and `other` hold different tokens.
    pub fn hamming_distance(&self, other: &SequenceState) -> usize {
        debug_assert_eq!(self.tokens.len(), other.tokens.len());
        self.tokens
            .iter()
            .zip(&other.tokens)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// A differentiable energy over flat embedding vectors.
///
/// `energy` and `gradient` accept any point of length `N * h`, not just
/// embedded sequences; off-lattice evaluation is what lets Langevin-style
/// updates and finite-difference checks work.
pub trait EnergyModel: Send + Sync {
    /// Sequence length `N` the model is defined over.
    fn positions(&self) -> usize;

    /// Vocabulary the model's sequences draw from.
    fn table(&self) -> &EmbeddingTable;

    /// Energy `U(x)` at a flat point of length `N * h`.
    fn energy(&self, x: &[f64]) -> f64;

    /// Gradient `∇U(x)` at a flat point, same length as `x`.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Row-major constant Hessian `∇²U` of size `(N*h)²`, when the model has
    /// one (i.e. the energy is an exact quadratic).
    fn constant_hessian(&self) -> Option<Vec<f64>> {
        None
    }

    /// Total flat dimension `N * h`.
    fn dim(&self) -> usize {
        self.positions() * self.table().dim()
    }
}

impl<M: EnergyModel + ?Sized> EnergyModel for &M {
    fn positions(&self) -> usize {
        (**self).positions()
    }
    fn table(&self) -> &EmbeddingTable {
        (**self).table()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn constant_hessian(&self) -> Option<Vec<f64>> {
        (**self).constant_hessian()
    }
}

impl<M: EnergyModel + ?Sized> EnergyModel for Box<M> {
    fn positions(&self) -> usize {
        (**self).positions()
    }
    fn table(&self) -> &EmbeddingTable {
        (**self).table()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn constant_hessian(&self) -> Option<Vec<f64>> {
        (**self).constant_hessian()
    }
}

impl<M: EnergyModel + ?Sized> EnergyModel for alloc::sync::Arc<M> {
    fn positions(&self) -> usize {
        (**self).positions()
    }
    fn table(&self) -> &EmbeddingTable {
        (**self).table()
    }
    fn energy(&self, x: &[f64]) -> f64 {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn constant_hessian(&self) -> Option<Vec<f64>> {
        (**self).constant_hessian()
    }
}

/// Checked energy evaluation of an embedded sequence.
pub fn energy_eval<M: EnergyModel + ?Sized>(model: &M, state: &SequenceState) -> Result<f64> {
    check_state(model, state)?;
    Ok(model.energy(state.embedding()))
}

/// Checked gradient evaluation of an embedded sequence.
pub fn gradient_eval<M: EnergyModel + ?Sized>(model: &M, state: &SequenceState) -> Result<Vec<f64>> {
    check_state(model, state)?;
    Ok(model.gradient(state.embedding()))
}

fn check_state<M: EnergyModel + ?Sized>(model: &M, state: &SequenceState) -> Result<()> {
    if state.embedding().len() != model.dim() {
        return Err(Error::DimensionMismatch {
            context: "state embedding vs. model",
            expected: model.dim(),
            got: state.embedding().len(),
        });
    }
    Ok(())
}

/// Central-difference gradient estimate using only energy evaluations.
///
/// Deliberately independent of [`EnergyModel::gradient`]: it is the oracle
/// analytic gradients are checked against. Relative accuracy is about
/// `step^2` away from cancellation-dominated regimes.
pub fn finite_diff_gradient<M: EnergyModel + ?Sized>(model: &M, x: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = model.energy(&probe);
        probe[i] = x[i] - step;
        let down = model.energy(&probe);
        probe[i] = x[i];
        out.push((up - down) / (2.0 * step));
    }
    out
}

/// Row-major coupling matrix of a cycle over `positions` sites, each carrying
/// a `block`-dimensional embedding.
///
/// Site `i` couples to sites `i±1 mod positions` with identity blocks, so for
/// `block = 1` this is the plain cycle adjacency matrix. Requires
/// `positions >= 3` (shorter cycles would double-count edges).
pub fn cycle_coupling(positions: usize, block: usize) -> Vec<f64> {
    assert!(positions >= 3, "cycle coupling needs at least 3 positions");
    assert!(block >= 1);
    let d = positions * block;
    let mut j = vec![0.0; d * d];
    for i in 0..positions {
        let next = (i + 1) % positions;
        for a in 0..block {
            let r = i * block + a;
            let c = next * block + a;
            j[r * d + c] = 1.0;
            j[c * d + r] = 1.0;
        }
    }
    j
}

/// Log-quadratic energy `U(x) = -beta * (x'Jx / 2 + b'x)`.
///
/// `J` is symmetrised on construction, so the gradient is
/// `-beta * (Jx + b)` and the Hessian is the constant `-beta * J`. With a
/// coupling matrix and zero bias this is an Ising-style model over the
/// embedded sequence.
#[derive(Debug, Clone)]
pub struct LogQuadraticEnergy {
    table: EmbeddingTable,
    positions: usize,
    coupling: Vec<f64>,
    bias: Vec<f64>,
    inverse_temperature: f64,
}

impl LogQuadraticEnergy {
    /// Builds the model, validating shapes and symmetrising the coupling.
    pub fn new(
        table: EmbeddingTable,
        positions: usize,
        coupling: Vec<f64>,
        bias: Vec<f64>,
        inverse_temperature: f64,
    ) -> Result<Self> {
        if positions == 0 {
            return Err(Error::InvalidParameter(String::from(
                "model needs at least one position",
            )));
        }
        let d = positions * table.dim();
        if coupling.len() != d * d {
            return Err(Error::DimensionMismatch {
                context: "coupling matrix vs. model dimension",
                expected: d * d,
                got: coupling.len(),
            });
        }
        if bias.len() != d {
            return Err(Error::DimensionMismatch {
                context: "bias vector vs. model dimension",
                expected: d,
                got: bias.len(),
            });
        }
        if !(inverse_temperature > 0.0 && inverse_temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be positive and finite, got {inverse_temperature}"
            )));
        }
        if coupling.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(String::from(
                "coupling and bias entries must be finite",
            )));
        }
        // Only the symmetric part of J contributes to x'Jx; store it so the
        // gradient formula -beta * (Jx + b) is exact as written.
        let mut sym = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                sym[r * d + c] = 0.5 * (coupling[r * d + c] + coupling[c * d + r]);
            }
        }
        Ok(Self {
            table,
            positions,
            coupling: sym,
            bias,
            inverse_temperature,
        })
    }

    /// Ferromagnetic cycle with zero bias: `U(x) = -beta/2 * x'Jx` where `J`
    /// is the cycle coupling over `positions` sites.
    pub fn cycle(table: EmbeddingTable, positions: usize, inverse_temperature: f64) -> Result<Self> {
        if positions < 3 {
            return Err(Error::InvalidParameter(format!(
                "cycle model needs at least 3 positions, got {positions}"
            )));
        }
        let block = table.dim();
        let d = positions * block;
        Self::new(
            table,
            positions,
            cycle_coupling(positions, block),
            vec![0.0; d],
            inverse_temperature,
        )
    }

    /// Inverse temperature `beta`.
    pub fn inverse_temperature(&self) -> f64 {
        self.inverse_temperature
    }

    /// Symmetrised row-major coupling matrix `J`.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// Bias vector `b`.
    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn coupling_times(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        self.coupling
            .chunks_exact(d)
            .map(|row| math::dot(row, x))
            .collect()
    }
}

impl EnergyModel for LogQuadraticEnergy {
    fn positions(&self) -> usize {
        self.positions
    }

    fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    fn energy(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let jx = self.coupling_times(x);
        -self.inverse_temperature * (0.5 * math::dot(x, &jx) + math::dot(&self.bias, x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        let mut g = self.coupling_times(x);
        for (gi, bi) in g.iter_mut().zip(&self.bias) {
            *gi = -self.inverse_temperature * (*gi + bi);
        }
        g
    }

    fn constant_hessian(&self) -> Option<Vec<f64>> {
        Some(
            self.coupling
                .iter()
                .map(|&j| -self.inverse_temperature * j)
                .collect(),
        )
    }
}

/// Weighted sum of energy models sharing one vocabulary and sequence length.
///
/// Energies and gradients combine linearly; the composite Hessian exists
/// exactly when every term has one.
pub struct CompositeEnergy {
    terms: Vec<(Box<dyn EnergyModel>, f64)>,
}

impl CompositeEnergy {
    /// Builds the composite, requiring at least one term and agreement on
    /// vocabulary and sequence length across terms.
    pub fn new(terms: Vec<(Box<dyn EnergyModel>, f64)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter(String::from("composite needs at least one term")))?;
        let (positions, table) = (first.0.positions(), first.0.table().clone());
        for (i, (model, weight)) in terms.iter().enumerate() {
            if !weight.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "composite weight {i} is not finite"
                )));
            }
            if model.positions() != positions {
                return Err(Error::DimensionMismatch {
                    context: "composite term sequence length",
                    expected: positions,
                    got: model.positions(),
                });
            }
            if *model.table() != table {
                return Err(Error::InvalidParameter(format!(
                    "composite term {i} uses a different embedding table"
                )));
            }
        }
        Ok(Self { terms })
    }

    /// The weighted terms.
    pub fn terms(&self) -> &[(Box<dyn EnergyModel>, f64)] {
        &self.terms
    }
}

impl EnergyModel for CompositeEnergy {
    fn positions(&self) -> usize {
        self.terms[0].0.positions()
    }

    fn table(&self) -> &EmbeddingTable {
        self.terms[0].0.table()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, w)| w * m.energy(x)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (model, w) in &self.terms {
            for (gi, ti) in g.iter_mut().zip(model.gradient(x)) {
                *gi += w * ti;
            }
        }
        g
    }

    fn constant_hessian(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let mut h = vec![0.0; d * d];
        for (model, w) in &self.terms {
            let hm = model.constant_hessian()?;
            for (hi, ti) in h.iter_mut().zip(hm) {
                *hi += w * ti;
            }
        }
        Some(h)
    }
}
