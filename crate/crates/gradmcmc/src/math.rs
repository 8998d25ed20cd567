//! Small numeric helpers shared across the crate.
//!
//! All transcendental functions go through `libm` rather than `std` intrinsics
//! so that results are bit-identical regardless of the `std` feature.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `|d|^p` for a single coordinate. `p = 1` and `p = 2` take exact paths so
/// the common norms do not depend on `pow` rounding.
#[inline]
pub(crate) fn abs_pow(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        abs(d)
    } else {
        libm::pow(abs(d), p)
    }
}

/// p-th power of the p-norm of `a - b`: `sum_i |a_i - b_i|^p`.
pub(crate) fn diff_pnorm_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        acc += abs_pow(ai - bi, p);
    }
    acc
}

/// Squared Euclidean distance between two flat vectors.
pub(crate) fn diff_sq_norm(a: &[f64], b: &[f64]) -> f64 {
    diff_pnorm_pow(a, b, 2.0)
}

/// `log(sum_i exp(x_i))` with max-subtraction for stability.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for &x in xs {
        acc += exp(x - m);
    }
    m + ln(acc)
}

/// Standard normal CDF via the complementary error function.
#[inline]
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [0.3, -1.2, 2.0];
        let direct = ln(xs.iter().map(|&x| exp(x)).sum());
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_large_inputs() {
        // Direct summation would overflow here; max-subtraction must not.
        let xs = [1000.0, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + ln(2.0))).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn abs_pow_exact_for_common_exponents() {
        assert_eq!(abs_pow(-2.0, 2.0), 4.0);
        assert_eq!(abs_pow(-2.0, 1.0), 2.0);
        assert!((abs_pow(-2.0, 3.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        // Phi(1) and Phi(-1) to standard table accuracy.
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-12);
    }
}
