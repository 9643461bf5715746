//! Max-type global test of `s1 == s2`.
//!
//! `M_n = max_k T_k^2`. Under the null, `M_n - 2 ln q + ln ln q` converges to
//! the Gumbel-type law `F(x) = exp(-pi^{-1/2} exp(-x/2))`, which gives the
//! critical value and p-value below.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTestResult {
    pub m_n: f64,
    pub standardized: f64,
    pub pvalue: f64,
    pub alpha: f64,
    pub critical_value: f64,
    pub reject: bool,
    /// Flat index of the first link attaining the maximum.
    pub argmax_link: usize,
}

/// `(max_k T_k^2, argmax)`; ties go to the smallest index.
pub fn global_statistic(t: &[f64]) -> Result<(f64, usize)> {
    if t.is_empty() {
        return Err(Error::invalid("global statistic needs at least one link"));
    }
    let mut best = (t[0] * t[0], 0);
    for (k, &x) in t.iter().enumerate().skip(1) {
        let sq = x * x;
        if sq > best.0 {
            best = (sq, k);
        }
    }
    Ok(best)
}

/// Limiting null CDF of the standardized statistic.
pub fn null_cdf(x: f64) -> f64 {
    (-PI.sqrt().recip() * (-x / 2.0).exp()).exp()
}

/// `1 - null_cdf(x)` without cancellation.
pub fn null_sf(x: f64) -> f64 {
    -(-PI.sqrt().recip() * (-x / 2.0).exp()).exp_m1()
}

/// `q_alpha = -ln(pi) - 2 ln ln (1 - alpha)^{-1}`, so that `null_cdf(q_alpha) = 1 - alpha`.
pub fn q_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-PI.ln() - 2.0 * (-(-alpha).ln_1p()).ln())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_q(q: usize) -> Result<()> {
    if q < 3 {
        return Err(Error::invalid(format!(
            "the global test needs q >= 3 links, got {q}"
        )));
    }
    Ok(())
}

fn centering(q: usize) -> f64 {
    let lq = (q as f64).ln();
    2.0 * lq - lq.ln()
}

/// Rejection threshold for `M_n`: `2 ln q - ln ln q + q_alpha`.
pub fn critical_value(alpha: f64, q: usize) -> Result<f64> {
    check_q(q)?;
    Ok(centering(q) + q_alpha(alpha)?)
}

pub fn run_global_test(t: &[f64], alpha: f64, q: usize) -> Result<GlobalTestResult> {
    check_q(q)?;
    check_alpha(alpha)?;
    if t.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: t.len(),
            context: "test statistics vs q".into(),
        });
    }
    let (m_n, argmax_link) = global_statistic(t)?;
    let standardized = m_n - centering(q);
    let pvalue = null_sf(standardized);
    let critical_value = critical_value(alpha, q)?;
    Ok(GlobalTestResult {
        m_n,
        standardized,
        pvalue,
        alpha,
        critical_value,
        reject: m_n >= critical_value,
        argmax_link,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_and_ties() {
        assert_eq!(global_statistic(&[0.0, 0.0, 0.0]).unwrap(), (0.0, 0));
        assert_eq!(global_statistic(&[1.5, -2.0, 0.3]).unwrap(), (4.0, 1));
        assert_eq!(global_statistic(&[2.0, -2.0]).unwrap(), (4.0, 0));
        assert!(global_statistic(&[]).is_err());
    }

    #[test]
    fn null_cdf_values() {
        assert!((null_cdf(0.0) - 0.568_820_941_864_020_2).abs() < 1e-15);
        assert!((null_cdf(200.0) - 1.0).abs() < 1e-15);
        assert!(null_cdf(-60.0) < 1e-100);
        for x in [-10.0, -1.0, 0.0, 2.5, 7.0] {
            assert!(null_cdf(x) < null_cdf(x + 1.0));
        }
    }

    #[test]
    fn q_alpha_values() {
        assert!((q_alpha(0.05).unwrap() - 4.795_660_612_234_929).abs() < 1e-12);
        assert!((q_alpha(0.01).unwrap() - 8.055_568_567_703_76).abs() < 1e-12);
        assert!((q_alpha(0.1).unwrap() - 3.356_004_768_775_49).abs() < 1e-12);
        for a in [0.01, 0.05, 0.1] {
            assert!((null_cdf(q_alpha(a).unwrap()) - (1.0 - a)).abs() < 1e-12);
        }
        assert!(q_alpha(0.0).is_err());
        assert!(q_alpha(1.0).is_err());
    }

    #[test]
    fn critical_value_for_68_nodes() {
        let cv = critical_value(0.05, 2278).unwrap();
        assert!((cv - 18.212_521_805_790_49).abs() < 1e-10);
        assert!(critical_value(0.05, 2).is_err());
    }

    #[test]
    fn all_zero_statistics_do_not_reject() {
        let r = run_global_test(&vec![0.0; 2278], 0.05, 2278).unwrap();
        assert_eq!(r.m_n, 0.0);
        assert!(!r.reject);
        assert!(r.pvalue > 0.999_999);
    }

    #[test]
    fn decision_matches_pvalue() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let q = rng.random_range(3..200);
            let scale = rng.random_range(0.5..6.0);
            let t: Vec<f64> = (0..q)
                .map(|_| scale * (rng.random::<f64>() * 2.0 - 1.0))
                .collect();
            let alpha = rng.random_range(0.001..0.5);
            let r = run_global_test(&t, alpha, q).unwrap();
            assert_eq!(
                r.reject,
                r.pvalue <= alpha,
                "m_n={} cv={}",
                r.m_n,
                r.critical_value
            );
        }
    }
}
