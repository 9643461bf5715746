//! Link-wise testing with an estimated-FDP threshold.
//!
//! For a threshold `h`, `R(h) = #{k : |T_k| >= h}` and the false positives are
//! estimated conservatively by `2q(1 - Phi(h))`. The procedure picks the
//! smallest `h` in `[0, sqrt(2 ln q)]` whose estimated FDP is at most `alpha`
//! (falling back to `sqrt(2 ln q)`) and rejects every link with `|T_k| >= h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::EnhancedDetail;
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Global,
    Baseline,
    Enhanced,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Global => "global",
            Method::Baseline => "baseline",
            Method::Enhanced => "enhanced",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Method::Global),
            "baseline" => Ok(Method::Baseline),
            "enhanced" => Ok(Method::Enhanced),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipleTestResult {
    pub method: Method,
    pub alpha: f64,
    /// Rejected flat link indices, ascending.
    pub rejected: Vec<usize>,
    /// `h_hat` for the baseline; the largest rejected adjusted p-value for the
    /// enhanced procedure (0 when nothing is rejected).
    pub threshold: f64,
    /// Estimated FDP at `h_hat` (baseline only).
    pub estimated_fdp: Option<f64>,
    pub enhanced: Option<EnhancedDetail>,
}

impl MultipleTestResult {
    pub fn n_rejections(&self) -> usize {
        self.rejected.len()
    }
}

/// `sqrt(2 ln q)`, the upper end of the threshold search.
pub fn max_threshold(q: usize) -> f64 {
    (2.0 * (q as f64).ln()).max(0.0).sqrt()
}

fn estimate_fdp_with_count(h: f64, rejections: usize, q: usize) -> f64 {
    2.0 * q as f64 * normal::upper_tail(h) / rejections.max(1) as f64
}

/// `2q(1 - Phi(h)) / max(R(h), 1)`.
pub fn estimate_fdp(h: f64, t: &[f64], q: usize) -> f64 {
    let r = t.iter().filter(|x| x.abs() >= h).count();
    estimate_fdp_with_count(h, r, q)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Smallest observed `|T_k|` in `[0, sqrt(2 ln q)]` with estimated FDP at most
/// `alpha`, else `sqrt(2 ln q)`.
///
/// `R(h)` only changes at observed `|T_k|` and the numerator decreases in `h`,
/// so on each gap between consecutive `|T|` values the feasible part is an
/// interval ending at the upper observed value. Every threshold in it rejects
/// the same links, so scanning the observed values reproduces the rejection
/// set of the exact infimum.
pub fn threshold_search(t: &[f64], alpha: f64, q: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let h_max = max_threshold(q);
    let mut abs: Vec<f64> = t.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let mut i = 0;
    while i < n && abs[i] <= h_max {
        let h = abs[i];
        // every tied value is rejected together
        let rejections = n - i;
        if estimate_fdp_with_count(h, rejections, q) <= alpha {
            return Ok(h);
        }
        while i < n && abs[i] == h {
            i += 1;
        }
    }
    Ok(h_max)
}

pub fn run_baseline_test(t: &[f64], alpha: f64, q: usize) -> Result<MultipleTestResult> {
    if t.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: t.len(),
            context: "test statistics vs q".into(),
        });
    }
    let h = threshold_search(t, alpha, q)?;
    let rejected: Vec<usize> = (0..q).filter(|&k| t[k].abs() >= h).collect();
    Ok(MultipleTestResult {
        method: Method::Baseline,
        alpha,
        estimated_fdp: Some(estimate_fdp_with_count(h, rejected.len(), q)),
        rejected,
        threshold: h,
        enhanced: None,
    })
}
