//! Exact, enumeration-based analysis of the kernels at desk scale.
//!
//! For a vocabulary of `K` tokens and `N` positions the state space has
//! `K^N` sequences. When that number is small enough to enumerate, nothing
//! about a kernel needs to be estimated: this module builds the literal
//! transition matrix, solves for its stationary distribution, and compares
//! kernels to the target `pi ∝ exp(-U)` in total variation — turning claims
//! like "this sampler is biased" into numbers with no Monte Carlo error.

mod matrices;
mod mixing;
mod spectral;
mod stationary;

pub use matrices::{build_transition_matrix, mucola_exact_matrix, MatrixKernel};
pub use mixing::{exact_mixing_time, mixing_time_lower_bound, MixingReport, MixingTime};
pub use spectral::{gershgorin_check, spectral_gap, GershgorinDiscs, SpectralGap};
pub use stationary::{
    detailed_balance_residual, detailed_balance_worst_pair, pi_alpha, reversible_stationary,
    stationary_by_power, stationary_distribution,
};

use alloc::format;
use alloc::vec::Vec;

use crate::energy::{EmbeddingTable, EnergyModel, SequenceState};
use crate::math;
use crate::{Error, Result};

/// Default cap on the number of enumerated sequences.
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;

/// All `K^N` sequences over a vocabulary, in lexicographic token order.
///
/// Position 0 is the most significant digit: index 0 is `(0, 0, ..., 0)`,
/// index 1 is `(0, ..., 0, 1)`, and so on. The index mapping is the basis for
/// every matrix and distribution in this module.
#[derive(Debug, Clone)]
pub struct StateSpace {
    table: EmbeddingTable,
    positions: usize,
    size: usize,
}

/// Enumerates the sequence space, refusing to blow past `cap` states.
pub fn enumerate_states(table: &EmbeddingTable, positions: usize, cap: u128) -> Result<StateSpace> {
    if positions == 0 {
        return Err(Error::InvalidParameter(format!(
            "state space needs at least one position, got {positions}"
        )));
    }
    let k = table.len() as u128;
    let required = k
        .checked_pow(positions as u32)
        .ok_or(Error::EnumerationCapExceeded {
            required: u128::MAX,
            cap,
        })?;
    if required > cap {
        return Err(Error::EnumerationCapExceeded { required, cap });
    }
    Ok(StateSpace {
        table: table.clone(),
        positions,
        size: required as usize,
    })
}

impl StateSpace {
    /// Number of enumerated sequences `K^N`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Sequence length `N`.
    pub fn positions(&self) -> usize {
        self.positions
    }

    /// The vocabulary the sequences draw from.
    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    /// Token indices of the sequence at `index`.
    pub fn tokens_of(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.size);
        let k = self.table.len();
        let mut tokens = alloc::vec![0; self.positions];
        let mut rest = index;
        for pos in (0..self.positions).rev() {
            tokens[pos] = rest % k;
            rest /= k;
        }
        tokens
    }

    /// Lexicographic index of a token sequence.
    pub fn index_of(&self, tokens: &[usize]) -> Result<usize> {
        if tokens.len() != self.positions {
            return Err(Error::DimensionMismatch {
                context: "token sequence vs. state space",
                expected: self.positions,
                got: tokens.len(),
            });
        }
        let k = self.table.len();
        let mut index = 0;
        for &t in tokens {
            if t >= k {
                return Err(Error::TokenOutOfRange {
                    index: t,
                    table_size: k,
                });
            }
            index = index * k + t;
        }
        Ok(index)
    }

    /// The embedded sequence at `index`.
    pub fn state_of(&self, index: usize) -> SequenceState {
        SequenceState::new(&self.table, self.tokens_of(index))
            .expect("enumerated tokens are always in range")
    }

    /// Iterates every sequence in index order.
    pub fn iter(&self) -> impl Iterator<Item = SequenceState> + '_ {
        (0..self.size).map(|i| self.state_of(i))
    }

    /// Checks that `model` is defined over exactly this space.
    pub fn check_model(&self, model: &(impl EnergyModel + ?Sized)) -> Result<()> {
        if model.positions() != self.positions {
            return Err(Error::DimensionMismatch {
                context: "model sequence length vs. state space",
                expected: self.positions,
                got: model.positions(),
            });
        }
        if *model.table() != self.table {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "model embedding table differs from the state space's",
            )));
        }
        Ok(())
    }

    /// Energy of every enumerated sequence, in index order.
    pub fn energies(&self, model: &(impl EnergyModel + ?Sized)) -> Result<Vec<f64>> {
        self.check_model(model)?;
        let mut out = Vec::with_capacity(self.size);
        for s in self.iter() {
            let e = model.energy(s.embedding());
            if e.is_nan() {
                return Err(Error::NumericalFailure(format!(
                    "energy is NaN at state {:?}",
                    s.tokens()
                )));
            }
            out.push(e);
        }
        Ok(out)
    }
}

/// A probability distribution over the enumerated sequences.
///
/// Entries are non-negative and normalised to sum exactly to 1 (inputs must
/// already sum to 1 within 1e-12; construction renormalises the remainder).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector {
    probs: Vec<f64>,
}

impl DistributionVector {
    /// Validating constructor from explicit probabilities.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "distribution must have at least one entry",
            )));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "distribution entries must be finite and non-negative, got {p}"
                )));
            }
            sum += p;
        }
        if math::abs(sum - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "distribution sums to {sum}, outside 1 ± 1e-12"
            )));
        }
        Ok(Self::normalised(probs, sum))
    }

    /// Normalised distribution `exp(w_i) / sum_j exp(w_j)` from log weights.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidParameter(alloc::string::String::from(
                "distribution must have at least one entry",
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::NumericalFailure(alloc::string::String::from(
                "log weights must be finite or -inf",
            )));
        }
        let lse = math::log_sum_exp(log_weights);
        if !lse.is_finite() {
            return Err(Error::NumericalFailure(alloc::string::String::from(
                "all log weights are -inf",
            )));
        }
        let probs: Vec<f64> = log_weights.iter().map(|&w| math::exp(w - lse)).collect();
        let sum = probs.iter().sum();
        Ok(Self::normalised(probs, sum))
    }

    pub(crate) fn normalised(mut probs: Vec<f64>, sum: f64) -> Self {
        for p in &mut probs {
            *p /= sum;
        }
        Self { probs }
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// True for a zero-length distribution (unconstructible; kept for form).
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of state `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// All probabilities, in state-index order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Smallest entry.
    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Total variation distance `max_A |mu(A) - nu(A)| = sum_i |mu_i - nu_i| / 2`.
pub fn tv_distance(a: &DistributionVector, b: &DistributionVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "distribution lengths",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(tv_between_slices(a.probs(), b.probs()))
}

pub(crate) fn tv_between_slices(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        acc += math::abs(x - y);
    }
    0.5 * acc
}

/// The target `pi(x) ∝ exp(-U(x))`, normalised by enumeration in log space.
pub fn exact_target(model: &(impl EnergyModel + ?Sized), space: &StateSpace) -> Result<DistributionVector> {
    let energies = space.energies(model)?;
    let log_weights: Vec<f64> = energies.iter().map(|&u| -u).collect();
    DistributionVector::from_log_weights(&log_weights)
}

/// A dense row-stochastic matrix over the enumerated sequences.
///
/// `data` is row-major: `data[i * size + j]` is the probability of moving
/// from state `i` to state `j` in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Validating constructor: entries non-negative (tiny negative rounding
    /// is clamped to 0) and every row summing to 1 within 1e-12.
    pub fn new(size: usize, mut data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return Err(Error::DimensionMismatch {
                context: "transition matrix data vs. size",
                expected: size * size,
                got: data.len(),
            });
        }
        for v in &mut data {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "transition probabilities must be non-negative, got {v}"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for i in 0..size {
            let sum: f64 = data[i * size..(i + 1) * size].iter().sum();
            if math::abs(sum - 1.0) > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} sums to {sum}, outside 1 ± 1e-12"
                )));
            }
        }
        Ok(Self { size, data })
    }

    /// Number of states.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Transition probability from `i` to `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    /// Row `i`: the one-step distribution out of state `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    /// Full row-major data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Worst row-sum deviation from 1.
    pub fn row_stochasticity_error(&self) -> f64 {
        (0..self.size)
            .map(|i| math::abs(self.row(i).iter().sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }

    /// Dense matrix product `self * other`.
    pub fn multiply(&self, other: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                context: "matrix product operand sizes",
                expected: self.size,
                got: other.size,
            });
        }
        let n = self.size;
        let mut out = alloc::vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row_b = &other.data[k * n..(k + 1) * n];
                let row_o = &mut out[i * n..(i + 1) * n];
                for (o, &b) in row_o.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(TransitionMatrix { size: n, data: out })
    }

    /// Rescales every row to sum exactly to 1.
    ///
    /// A floating-point matrix product leaves each row short or long by a
    /// few ulps, and under repeated squaring that excess compounds as
    /// `(1 + e)^(2^t)` — enough to overflow long before a slow chain's
    /// power converges. Callers that iterate products of stochastic
    /// matrices project back onto the simplex after every step instead.
    pub(crate) fn renormalise_rows(&mut self) {
        for i in 0..self.size {
            let row = &mut self.data[i * self.size..(i + 1) * self.size];
            let sum: f64 = row.iter().sum();
            for v in row {
                *v /= sum;
            }
        }
    }

    /// Left action `mu' = mu P` of the matrix on a row vector.
    pub fn left_multiply(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.size {
            return Err(Error::DimensionMismatch {
                context: "row vector vs. matrix size",
                expected: self.size,
                got: mu.len(),
            });
        }
        let n = self.size;
        let mut out = alloc::vec![0.0; n];
        for (&m, row) in mu.iter().zip(self.data.chunks_exact(n)) {
            if m == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(row) {
                *o += m * p;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::LogQuadraticEnergy;
    use alloc::vec;

    fn pm_table() -> EmbeddingTable {
        EmbeddingTable::from_scalars(&[-1.0, 1.0]).unwrap()
    }

    #[test]
    fn enumeration_sizes_and_cap() {
        let t = pm_table();
        assert_eq!(enumerate_states(&t, 3, DEFAULT_STATE_CAP).unwrap().size(), 8);
        assert_eq!(enumerate_states(&t, 5, DEFAULT_STATE_CAP).unwrap().size(), 32);

        let three = EmbeddingTable::from_scalars(&[-1.0, 0.0, 1.0]).unwrap();
        // 3^13 = 1,594,323 exceeds the million-state default cap.
        match enumerate_states(&three, 13, DEFAULT_STATE_CAP) {
            Err(Error::EnumerationCapExceeded { required, cap }) => {
                assert_eq!(required, 1_594_323);
                assert_eq!(cap, DEFAULT_STATE_CAP);
            }
            other => panic!("expected cap refusal, got {other:?}"),
        }
    }

    #[test]
    fn index_roundtrip_is_lexicographic() {
        let t = pm_table();
        let space = enumerate_states(&t, 3, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(space.tokens_of(0), vec![0, 0, 0]);
        assert_eq!(space.tokens_of(1), vec![0, 0, 1]);
        assert_eq!(space.tokens_of(7), vec![1, 1, 1]);
        for i in 0..space.size() {
            assert_eq!(space.index_of(&space.tokens_of(i)).unwrap(), i);
        }
        assert!(space.index_of(&[0, 0]).is_err());
        assert!(space.index_of(&[0, 0, 9]).is_err());
    }

    #[test]
    fn triangle_target_matches_closed_form() {
        // Z = 2 e^{1.26} + 6 e^{-0.42}; aligned states have probability
        // e^{1.26} / Z ≈ 0.3207, each mixed state e^{-0.42} / Z ≈ 0.0598.
        let m = LogQuadraticEnergy::cycle(pm_table(), 3, 0.42).unwrap();
        let space = enumerate_states(m.table(), 3, DEFAULT_STATE_CAP).unwrap();
        let pi = exact_target(&m, &space).unwrap();
        let z = 2.0 * (1.26f64).exp() + 6.0 * (-0.42f64).exp();
        let aligned = (1.26f64).exp() / z;
        let mixed = (-0.42f64).exp() / z;
        assert!((pi.prob(0) - aligned).abs() < 1e-12); // (0,0,0)
        assert!((pi.prob(7) - aligned).abs() < 1e-12); // (1,1,1)
        for i in 1..7 {
            assert!((pi.prob(i) - mixed).abs() < 1e-12);
        }
        assert!((aligned - 0.3207).abs() < 5e-5);
        assert!((mixed - 0.0598).abs() < 5e-5);
        let total: f64 = pi.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distribution_constructor_validates() {
        assert!(DistributionVector::new(vec![0.5, 0.5]).is_ok());
        assert!(DistributionVector::new(vec![0.6, 0.5]).is_err());
        assert!(DistributionVector::new(vec![-0.1, 1.1]).is_err());
        assert!(DistributionVector::new(vec![]).is_err());
        let d = DistributionVector::from_log_weights(&[0.0, 0.0, f64::NEG_INFINITY]).unwrap();
        assert!((d.prob(0) - 0.5).abs() < 1e-15);
        assert_eq!(d.prob(2), 0.0);
        assert!(DistributionVector::from_log_weights(&[f64::NEG_INFINITY]).is_err());
    }

    #[test]
    fn tv_distance_reference_values() {
        let a = DistributionVector::new(vec![0.75, 0.25]).unwrap();
        let b = DistributionVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert!((tv_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        let point = DistributionVector::new(vec![1.0, 0.0]).unwrap();
        let other = DistributionVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(tv_distance(&point, &other).unwrap(), 1.0);
        let c = DistributionVector::new(vec![1.0]).unwrap();
        assert!(tv_distance(&a, &c).is_err());
    }

    #[test]
    fn transition_matrix_validates_rows() {
        assert!(TransitionMatrix::new(2, vec![0.5, 0.5, 0.1, 0.9]).is_ok());
        assert!(TransitionMatrix::new(2, vec![0.5, 0.6, 0.1, 0.9]).is_err());
        assert!(TransitionMatrix::new(2, vec![1.5, -0.5, 0.1, 0.9]).is_err());
        assert!(TransitionMatrix::new(2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn matrix_products_stay_stochastic() {
        let p = TransitionMatrix::new(2, vec![0.9, 0.1, 0.4, 0.6]).unwrap();
        let p2 = p.multiply(&p).unwrap();
        assert!(p2.row_stochasticity_error() < 1e-15);
        // (P^2)_{00} = 0.9*0.9 + 0.1*0.4 = 0.85.
        assert!((p2.get(0, 0) - 0.85).abs() < 1e-15);
        let mu = p.left_multiply(&[1.0, 0.0]).unwrap();
        assert_eq!(mu, vec![0.9, 0.1]);
    }
}
