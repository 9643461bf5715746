//! Per-link two-sample summaries.
//!
//! For link `k` with group means `m1, m2` and biased variances `v1, v2`
//! (divisor `n_d`):
//!
//! ```text
//! W = m1 - m2
//! T = W / sqrt(v1/n1 + v2/n2)
//! kappa = (n2 v1) / (n1 v2)
//! A = (m1 + kappa m2) / sqrt(v1/n1 + kappa^2 v2/n2)
//! ```
//!
//! `T` carries the evidence against `m1 == m2`; `A` is a standardized weighted
//! sum that is asymptotically independent of `T` under the null and is used
//! only to group links.

use crate::error::{Error, Result};
use crate::netdata::NetworkSampleStack;
use crate::normal;

/// Group means and biased variances for every link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSummaries {
    pub n1: usize,
    pub n2: usize,
    pub mean1: Vec<f64>,
    pub mean2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl LinkSummaries {
    pub fn q(&self) -> usize {
        self.mean1.len()
    }

    pub fn w(&self, k: usize) -> f64 {
        self.mean1[k] - self.mean2[k]
    }

    /// Both variances exactly zero.
    pub fn is_degenerate(&self, k: usize) -> bool {
        self.v1[k] == 0.0 && self.v2[k] == 0.0
    }

    /// Group-swapped summaries.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
            mean1: self.mean2.clone(),
            mean2: self.mean1.clone(),
            v1: self.v2.clone(),
            v2: self.v1.clone(),
        }
    }
}

fn mean_and_variance(stack: &NetworkSampleStack) -> (Vec<f64>, Vec<f64>) {
    let q = stack.q();
    let n = stack.n() as f64;
    let mut sum = vec![0.0; q];
    for s in stack.samples() {
        for (acc, &x) in sum.iter_mut().zip(s) {
            *acc += x;
        }
    }
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    let mut ss = vec![0.0; q];
    for s in stack.samples() {
        for ((acc, &x), &m) in ss.iter_mut().zip(s).zip(&mean) {
            let d = x - m;
            *acc += d * d;
        }
    }
    let var = ss.into_iter().map(|s| s / n).collect();
    (mean, var)
}

/// Group means and variances (divisor `n_d`) over all links.
pub fn link_summaries(
    stack1: &NetworkSampleStack,
    stack2: &NetworkSampleStack,
) -> Result<LinkSummaries> {
    if stack1.p() != stack2.p() {
        return Err(Error::DimensionMismatch {
            expected: stack1.p(),
            found: stack2.p(),
            context: "node count of group 2 vs group 1".into(),
        });
    }
    let (mean1, v1) = mean_and_variance(stack1);
    let (mean2, v2) = mean_and_variance(stack2);
    Ok(LinkSummaries {
        n1: stack1.n(),
        n2: stack2.n(),
        mean1,
        mean2,
        v1,
        v2,
    })
}

/// `T` for every link. Links with both variances zero and equal means get
/// `T = 0`; zero variance with unequal means has no finite statistic and is
/// reported as an error.
pub fn test_statistics(s: &LinkSummaries) -> Result<Vec<f64>> {
    let (n1, n2) = (s.n1 as f64, s.n2 as f64);
    (0..s.q())
        .map(|k| {
            let w = s.w(k);
            if s.is_degenerate(k) {
                if w != 0.0 {
                    return Err(Error::DegenerateWithDifference { link: k, diff: w });
                }
                return Ok(0.0);
            }
            Ok(w / (s.v1[k] / n1 + s.v2[k] / n2).sqrt())
        })
        .collect()
}

/// `(kappa_hat, A)` for every link. `kappa_hat` is `None` and `A = 0` when
/// either variance is zero (the ratio or the standardization breaks down).
pub fn auxiliary_statistics(s: &LinkSummaries) -> (Vec<Option<f64>>, Vec<f64>) {
    let (n1, n2) = (s.n1 as f64, s.n2 as f64);
    (0..s.q())
        .map(|k| {
            let (v1, v2) = (s.v1[k], s.v2[k]);
            if v1 == 0.0 || v2 == 0.0 {
                return (None, 0.0);
            }
            let kappa = (n2 * v1) / (n1 * v2);
            let a = (s.mean1[k] + kappa * s.mean2[k]) / (v1 / n1 + kappa * kappa * v2 / n2).sqrt();
            (Some(kappa), a)
        })
        .unzip()
}

pub fn two_sided_pvalues(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&x| normal::two_sided_pvalue(x)).collect()
}

/// Everything downstream procedures need, per link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatistics {
    pub summaries: LinkSummaries,
    pub t: Vec<f64>,
    pub kappa_hat: Vec<Option<f64>>,
    pub a: Vec<f64>,
    pub pvalue: Vec<f64>,
    /// Both variances zero.
    pub degenerate: Vec<bool>,
    /// At least one variance zero, so `A` was set to 0.
    pub aux_degenerate: Vec<bool>,
}

impl LinkStatistics {
    pub fn compute(stack1: &NetworkSampleStack, stack2: &NetworkSampleStack) -> Result<Self> {
        Self::from_summaries(link_summaries(stack1, stack2)?)
    }

    pub fn from_summaries(summaries: LinkSummaries) -> Result<Self> {
        let t = test_statistics(&summaries)?;
        let (kappa_hat, a) = auxiliary_statistics(&summaries);
        let pvalue = two_sided_pvalues(&t);
        let degenerate = (0..summaries.q())
            .map(|k| summaries.is_degenerate(k))
            .collect();
        let aux_degenerate = kappa_hat.iter().map(Option::is_none).collect();
        Ok(Self {
            summaries,
            t,
            kappa_hat,
            a,
            pvalue,
            degenerate,
            aux_degenerate,
        })
    }

    pub fn q(&self) -> usize {
        self.t.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netdata::Group;

    /// Single-link stacks (p = 2) from per-sample values.
    fn one_link(values: &[f64], group: Group) -> NetworkSampleStack {
        NetworkSampleStack::from_links(group, 2, values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn hand_computed_summaries() {
        let s = link_summaries(
            &one_link(&[1.0, 3.0], Group::First),
            &one_link(&[0.0, 2.0, 4.0], Group::Second),
        )
        .unwrap();
        assert_eq!(s.w(0), 0.0);
        assert_eq!(s.v1[0], 1.0);
        assert!((s.v2[0] - 8.0 / 3.0).abs() < 1e-15);

        let s = link_summaries(
            &one_link(&[1.0, 3.0], Group::First),
            &one_link(&[0.0, 0.0, 3.0], Group::Second),
        )
        .unwrap();
        assert_eq!(s.w(0), 1.0);
        assert_eq!(s.v1[0], 1.0);
        assert_eq!(s.v2[0], 2.0);
        let t = test_statistics(&s).unwrap();
        assert!((t[0] - 0.925_820_099_772_551_5).abs() < 1e-12);
    }

    #[test]
    fn constant_groups_are_degenerate() {
        let stats = LinkStatistics::compute(
            &one_link(&[2.5, 2.5], Group::First),
            &one_link(&[2.5, 2.5, 2.5], Group::Second),
        )
        .unwrap();
        assert!(stats.degenerate[0]);
        assert_eq!(stats.t[0], 0.0);
        assert_eq!(stats.pvalue[0], 1.0);
        assert_eq!(stats.a[0], 0.0);
        assert!(stats.aux_degenerate[0]);
    }

    #[test]
    fn separated_constant_groups_error() {
        let r = LinkStatistics::compute(
            &one_link(&[0.0, 0.0], Group::First),
            &one_link(&[1.0, 1.0], Group::Second),
        );
        assert!(matches!(r, Err(Error::DegenerateWithDifference { .. })));
    }

    #[test]
    fn auxiliary_hand_example() {
        let s = LinkSummaries {
            n1: 2,
            n2: 3,
            mean1: vec![2.0],
            mean2: vec![1.0],
            v1: vec![1.0],
            v2: vec![2.0],
        };
        let (kappa, a) = auxiliary_statistics(&s);
        assert_eq!(kappa[0], Some(0.75));
        assert!((a[0] - 2.939_873_661_036_668).abs() < 1e-12);
    }

    #[test]
    fn one_sided_zero_variance() {
        let s = LinkSummaries {
            n1: 4,
            n2: 4,
            mean1: vec![0.5, 0.0],
            mean2: vec![0.0, 0.5],
            v1: vec![0.25, 0.0],
            v2: vec![0.0, 0.25],
        };
        let t = test_statistics(&s).unwrap();
        assert!(t.iter().all(|x| x.is_finite()));
        let (kappa, a) = auxiliary_statistics(&s);
        assert_eq!(kappa, vec![None, None]);
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_difference_gives_zero_t() {
        let s = LinkSummaries {
            n1: 5,
            n2: 7,
            mean1: vec![0.3],
            mean2: vec![0.3],
            v1: vec![0.2],
            v2: vec![0.9],
        };
        assert_eq!(test_statistics(&s).unwrap(), vec![0.0]);
    }

    #[test]
    fn mismatched_p_rejected() {
        let a = NetworkSampleStack::from_links(Group::First, 2, vec![vec![1.0], vec![2.0]]);
        let b = NetworkSampleStack::from_links(
            Group::Second,
            3,
            vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]],
        );
        assert!(link_summaries(&a.unwrap(), &b.unwrap()).is_err());
    }
}
