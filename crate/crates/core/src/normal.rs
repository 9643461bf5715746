//! Standard normal distribution function.
//!
//! Upper tails go through `erfc` directly and are never formed as `1 - cdf`,
//! so values like `upper_tail(8.0) ~ 6.2e-16` keep full relative precision.

use std::f64::consts::FRAC_1_SQRT_2;

/// `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `2 * (1 - Phi(|t|))`.
pub fn two_sided_pvalue(t: f64) -> f64 {
    libm::erfc(t.abs() * FRAC_1_SQRT_2).min(1.0)
}
