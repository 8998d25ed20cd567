//! Eigenstructure of exact transition matrices: spectral gap for reversible
//! chains and Gershgorin disc localisation for arbitrary ones.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};

use crate::exact::{detailed_balance_worst_pair, DistributionVector, TransitionMatrix};
use crate::math;
use crate::{Error, Result};

/// Detailed-balance residual above this disqualifies the symmetrisation.
const REVERSIBILITY_TOL: f64 = 1e-10;
/// The top eigenvalue of a stochastic matrix must be 1 to within this.
const TOP_EIGENVALUE_TOL: f64 = 1e-8;
/// Slack when testing eigenvalues against disc boundaries.
const GERSHGORIN_TOL: f64 = 1e-8;

/// Spectrum of a reversible transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGap {
    /// Absolute spectral gap `1 - max{|lambda| : lambda != lambda_1}`. The
    /// relaxation time is its reciprocal.
    pub gamma: f64,
    /// Second-largest eigenvalue (signed). `1 - lambda_2` can exceed `gamma`
    /// when the most stubborn mode oscillates (a large negative eigenvalue).
    pub lambda_2: f64,
    /// All eigenvalues, descending. The first is 1 up to rounding.
    pub eigenvalues: Vec<f64>,
}

/// Eigendecomposition of a reversible chain through its symmetrisation.
///
/// A chain reversible with respect to `pi` is similar to the symmetric matrix
/// `S = D^(1/2) P D^(-1/2)` with `D = diag(pi)`, so its spectrum is real and
/// a symmetric eigensolver applies. Reversibility is *checked*, not assumed:
/// a detailed-balance residual above 1e-10 returns
/// [`Error::NotReversible`] naming the worst state pair, because the
/// symmetrised spectrum of a non-reversible chain is simply a different set
/// of numbers than the chain's eigenvalues.
pub fn spectral_gap(p: &TransitionMatrix, pi: &DistributionVector) -> Result<SpectralGap> {
    let n = p.size();
    if n < 2 {
        return Err(Error::InvalidParameter(String::from(
            "spectral gap needs at least two states",
        )));
    }
    let (i, j, residual) = detailed_balance_worst_pair(p, pi)?;
    if residual.is_nan() || residual >= REVERSIBILITY_TOL {
        return Err(Error::NotReversible {
            i,
            j,
            residual,
            tol: REVERSIBILITY_TOL,
        });
    }
    if pi.min_prob() == 0.0 {
        return Err(Error::InvalidParameter(String::from(
            "stationary distribution has a zero entry; the similarity \
             transform D^(1/2) P D^(-1/2) is undefined",
        )));
    }

    let sqrt_pi: Vec<f64> = pi.probs().iter().map(|&v| math::sqrt(v)).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            s[(r, c)] = sqrt_pi[r] * p.get(r, c) / sqrt_pi[c];
        }
    }
    // Fold residual asymmetry (at most ~1e-10 of flux) away so the symmetric
    // eigensolver sees an exactly symmetric input.
    for r in 0..n {
        for c in r + 1..n {
            let m = 0.5 * (s[(r, c)] + s[(c, r)]);
            s[(r, c)] = m;
            s[(c, r)] = m;
        }
    }

    let mut eigenvalues: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    if eigenvalues.iter().any(|v| v.is_nan()) {
        return Err(Error::NumericalFailure(String::from(
            "symmetric eigensolver returned NaN",
        )));
    }
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("no NaN after the check above"));
    let top = eigenvalues[0];
    if math::abs(top - 1.0) > TOP_EIGENVALUE_TOL {
        return Err(Error::NumericalFailure(format!(
            "top eigenvalue {top} is not 1 within {TOP_EIGENVALUE_TOL:.1e}"
        )));
    }
    let lambda_2 = eigenvalues[1];
    let lambda_star = math::abs(lambda_2).max(math::abs(eigenvalues[n - 1]));
    Ok(SpectralGap {
        gamma: 1.0 - lambda_star,
        lambda_2,
        eigenvalues,
    })
}

/// Gershgorin localisation of a matrix spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct GershgorinDiscs {
    /// Per-row `(centre, radius)`: the diagonal entry and the off-diagonal
    /// absolute row sum. For a stochastic matrix these sum to 1 exactly.
    pub discs: Vec<(f64, f64)>,
    /// Complex eigenvalues as `(re, im)` pairs, by descending real part.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Whether every eigenvalue lies in the union of the discs (within
    /// `tolerance`). False would contradict the circle theorem and flags a
    /// numerical problem, not a property of the chain.
    pub all_contained: bool,
    /// Slack applied to each disc boundary.
    pub tolerance: f64,
}

/// Computes Gershgorin discs and verifies they contain the full spectrum.
///
/// Works for any transition matrix, reversible or not — the projected
/// Langevin kernel's complex eigenvalues are as admissible as a symmetric
/// chain's real ones. Each disc of a stochastic matrix is centred at the
/// holding probability `P_ii` with radius `1 - P_ii`, so the union always
/// pins the spectrum inside the unit disc tangent at 1.
pub fn gershgorin_check(p: &TransitionMatrix) -> Result<GershgorinDiscs> {
    let n = p.size();
    let discs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let centre = p.get(i, i);
            let radius = p
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| math::abs(v))
                .sum();
            (centre, radius)
        })
        .collect();

    // Solve for the spectrum of (P - I) / s instead of P itself. A frozen
    // chain is a rounding error away from the identity, where every QR shift
    // equals 1 exactly, the shifted diagonal cancels to zero, and the
    // solver's relative deflation test can never fire — the iteration spins
    // forever. Shifting and rescaling puts the interesting part of the
    // matrix at magnitude one, and the spectrum maps back as 1 + s lambda.
    let scale = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| math::abs(p.get(r, c) - if r == c { 1.0 } else { 0.0 }))
        .fold(0.0, f64::max);
    let mut eigenvalues: Vec<(f64, f64)> = if scale == 0.0 {
        // P is exactly the identity; its spectrum is all ones.
        alloc::vec![(1.0, 0.0); n]
    } else {
        let shifted = DMatrix::<f64>::from_fn(n, n, |r, c| {
            (p.get(r, c) - if r == c { 1.0 } else { 0.0 }) / scale
        });
        let schur = Schur::try_new(shifted, f64::EPSILON, 100_000).ok_or_else(|| {
            Error::NumericalFailure(String::from(
                "complex eigensolver did not converge within 100000 iterations",
            ))
        })?;
        schur
            .complex_eigenvalues()
            .iter()
            .map(|z| (1.0 + scale * z.re, scale * z.im))
            .collect()
    };
    if eigenvalues.iter().any(|(re, im)| re.is_nan() || im.is_nan()) {
        return Err(Error::NumericalFailure(String::from(
            "complex eigensolver returned NaN",
        )));
    }
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("no NaN after the check above"));

    let all_contained = eigenvalues.iter().all(|&(re, im)| {
        discs.iter().any(|&(centre, radius)| {
            let dr = re - centre;
            math::sqrt(dr * dr + im * im) <= radius + GERSHGORIN_TOL
        })
    });
    Ok(GershgorinDiscs {
        discs,
        eigenvalues,
        all_contained,
        tolerance: GERSHGORIN_TOL,
    })
}
