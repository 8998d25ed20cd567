//! Trace diagnostics: empirical state distributions, total-variation decay
//! curves, and batch-means energy summaries.
//!
//! Everything here consumes a recorded [`ChainTrace`] together with the
//! enumerated [`StateSpace`] it ran over, and produces the quantities the
//! exact side of the crate predicts — so simulation and closed form meet on
//! the same axes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::exact::{DistributionVector, StateSpace};
use crate::math;
use crate::samplers::ChainTrace;
use crate::{Error, Result};

/// Visit counts over an enumerated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalDistribution {
    /// An empty tally over `states` states.
    pub fn new(states: usize) -> Result<Self> {
        if states == 0 {
            return Err(Error::InvalidParameter(String::from(
                "empirical distribution needs at least one state",
            )));
        }
        Ok(Self {
            counts: vec![0; states],
            total: 0,
        })
    }

    /// Tallies the post-burn-in entries of a trace.
    ///
    /// Entry indices `burn_in..` are counted; entry 0 is the initial state,
    /// so `burn_in = 0` includes it. Fails if the burn-in consumes the whole
    /// trace.
    pub fn from_trace(trace: &ChainTrace, space: &StateSpace, burn_in: usize) -> Result<Self> {
        let mut tally = Self::new(space.size())?;
        tally.record_trace(trace, space, burn_in)?;
        Ok(tally)
    }

    /// Number of states tallied over.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// True if the tally covers no states (unconstructible; kept for form).
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of recorded visits.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Visit counts by state index.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Records one visit to `state_index`.
    pub fn record(&mut self, state_index: usize) -> Result<()> {
        if state_index >= self.counts.len() {
            return Err(Error::InvalidParameter(format!(
                "state index {state_index} out of range for {} states",
                self.counts.len()
            )));
        }
        self.counts[state_index] += 1;
        self.total += 1;
        Ok(())
    }

    /// Records every trace entry from `from_entry` onward.
    pub fn record_trace(
        &mut self,
        trace: &ChainTrace,
        space: &StateSpace,
        from_entry: usize,
    ) -> Result<()> {
        if space.size() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                context: "state space vs. empirical distribution",
                expected: self.counts.len(),
                got: space.size(),
            });
        }
        if trace.positions() != space.positions() {
            return Err(Error::DimensionMismatch {
                context: "trace sequence length vs. state space",
                expected: space.positions(),
                got: trace.positions(),
            });
        }
        if from_entry >= trace.len() {
            return Err(Error::InvalidParameter(format!(
                "burn-in of {from_entry} entries consumes the whole trace of {}",
                trace.len()
            )));
        }
        let mut tokens = vec![0usize; trace.positions()];
        for t in from_entry..trace.len() {
            for (slot, &tok) in tokens.iter_mut().zip(trace.state_tokens(t)) {
                *slot = tok as usize;
            }
            let index = space.index_of(&tokens)?;
            self.counts[index] += 1;
            self.total += 1;
        }
        Ok(())
    }

    /// Adds another tally over the same space. Associative and commutative,
    /// so per-seed tallies can be folded in any order.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::DimensionMismatch {
                context: "merged empirical distributions",
                expected: self.counts.len(),
                got: other.counts.len(),
            });
        }
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            *mine += theirs;
        }
        self.total += other.total;
        Ok(())
    }

    /// The visit frequencies as a probability distribution.
    pub fn normalized(&self) -> Result<DistributionVector> {
        if self.total == 0 {
            return Err(Error::InvalidParameter(String::from(
                "empirical distribution has no samples",
            )));
        }
        let probs: Vec<f64> = self
            .counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect();
        DistributionVector::new(probs)
    }
}

/// Total variation between the running empirical distribution and `reference`
/// at each checkpoint.
///
/// The empirical distribution at checkpoint `t` pools entries `0..=t` — the
/// initial state counts, so the curve starts near 1 and decays as the chain
/// forgets where it started. Checkpoints must be strictly increasing and
/// inside the trace; the same trace sliced at coarser checkpoints yields the
/// same values at the shared points.
pub fn tv_curve(
    trace: &ChainTrace,
    space: &StateSpace,
    reference: &DistributionVector,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if reference.len() != space.size() {
        return Err(Error::DimensionMismatch {
            context: "reference distribution vs. state space",
            expected: space.size(),
            got: reference.len(),
        });
    }
    if trace.positions() != space.positions() {
        return Err(Error::DimensionMismatch {
            context: "trace sequence length vs. state space",
            expected: space.positions(),
            got: trace.positions(),
        });
    }
    for pair in checkpoints.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter(format!(
                "checkpoints must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if let Some(&last) = checkpoints.last() {
        if last >= trace.len() {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {last} beyond the last trace entry {}",
                trace.len() - 1
            )));
        }
    }

    let mut counts = vec![0u64; space.size()];
    let mut tokens = vec![0usize; trace.positions()];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for t in 0..trace.len() {
        if next == checkpoints.len() {
            break;
        }
        for (slot, &tok) in tokens.iter_mut().zip(trace.state_tokens(t)) {
            *slot = tok as usize;
        }
        counts[space.index_of(&tokens)?] += 1;
        if t == checkpoints[next] {
            let total = (t + 1) as f64;
            let tv = 0.5
                * counts
                    .iter()
                    .zip(reference.probs())
                    .map(|(&c, &r)| math::abs(c as f64 / total - r))
                    .sum::<f64>();
            out.push((t, tv));
            next += 1;
        }
    }
    Ok(out)
}

/// Post-burn-in energy statistics with a batch-means standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySummary {
    /// Mean energy over the retained entries.
    pub mean: f64,
    /// Sample variance (n - 1 denominator) over the retained entries.
    pub variance: f64,
    /// Batch-means standard error of the mean. Unlike `sqrt(variance / n)`
    /// this stays honest under autocorrelation, which Markov chain output
    /// always has.
    pub standard_error: f64,
    /// Number of retained entries.
    pub samples: usize,
    /// Number of batches behind the standard error.
    pub batches: usize,
}

/// Conventional burn-in: the first tenth of the recorded entries.
pub fn default_burn_in(entries: usize) -> usize {
    entries / 10
}

/// Summarises the energies of a trace after discarding `burn_in` entries.
///
/// The standard error comes from non-overlapping batch means with batch
/// length `floor(sqrt(n))`; entries past the last full batch contribute to
/// the mean and variance but not to the error estimate. Needs at least four
/// retained entries so there are two batches to compare.
pub fn energy_summary(trace: &ChainTrace, burn_in: usize) -> Result<EnergySummary> {
    let len = trace.len();
    if burn_in >= len || len - burn_in < 4 {
        return Err(Error::InvalidParameter(format!(
            "energy summary needs at least 4 post-burn-in entries, got {}",
            len.saturating_sub(burn_in)
        )));
    }
    let energies = &trace.energies()[burn_in..];
    let n = energies.len();
    let mean = energies.iter().sum::<f64>() / n as f64;
    let variance = energies.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64;

    let batch_len = n.isqrt();
    let batches = n / batch_len;
    let mut batch_means = Vec::with_capacity(batches);
    for b in 0..batches {
        let chunk = &energies[b * batch_len..(b + 1) * batch_len];
        batch_means.push(chunk.iter().sum::<f64>() / batch_len as f64);
    }
    let grand = batch_means.iter().sum::<f64>() / batches as f64;
    let between = batch_means
        .iter()
        .map(|&m| (m - grand) * (m - grand))
        .sum::<f64>()
        / (batches - 1) as f64;
    let standard_error = math::sqrt(between / batches as f64);

    Ok(EnergySummary {
        mean,
        variance,
        standard_error,
        samples: n,
        batches,
    })
}
