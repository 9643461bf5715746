//! Power-enhanced link-wise testing.
//!
//! Links are grouped by the auxiliary statistic `A` using `K - 1` cut points
//! from a grid; each group's alternative proportion is estimated from its
//! p-values, the p-values are reweighted group-wise and a BH step-up is run
//! on the reweighted values. Every choice of cut points is scanned and the
//! one with the most rejections wins.
//!
//! For cut points `lambda_1 < ... < lambda_{K-1}` (with `lambda_0 = -inf`,
//! `lambda_K = +inf`), `G_k = {i : lambda_{k-1} < A_i <= lambda_k}` and
//!
//! ```text
//! w_i = q * o_k / sum_j q_j o_j,   o_k = pi_k / (1 - pi_k),   i in G_k
//! p_i^w = min(p_i / w_i, 1)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdr::{Method, MultipleTestResult};
use crate::stats::two_sided_pvalues;

/// Multipliers of `sqrt(ln q)` bounding the grid are truncated to this.
pub const GRID_BOUND: f64 = 16.0;
/// Target spacing between adjacent grid points.
pub const TARGET_SPACING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub k_groups: usize,
    /// `(C1, C2)`; derived from the range of `A` when absent.
    pub c_bounds: Option<(f64, f64)>,
    /// Grid density `N`; chosen so the spacing is close to 0.1 when absent.
    pub n_grid: Option<usize>,
    pub epsilon: f64,
    pub storey_lambda: f64,
    pub alpha: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            k_groups: 3,
            c_bounds: None,
            n_grid: None,
            epsilon: 1e-5,
            storey_lambda: 0.5,
            alpha: 0.05,
        }
    }
}

impl GapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_groups < 1 {
            return Err(Error::invalid("k_groups must be >= 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.storey_lambda > 0.0 && self.storey_lambda < 1.0) {
            return Err(Error::invalid(format!(
                "storey_lambda must lie in (0, 1), got {}",
                self.storey_lambda
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some((c1, c2)) = self.c_bounds {
            if !(c1 <= c2) {
                return Err(Error::invalid(format!("need C1 <= C2, got ({c1}, {c2})")));
            }
        }
        if self.n_grid == Some(0) {
            return Err(Error::invalid("n_grid must be >= 1"));
        }
        Ok(())
    }
}

/// Candidate cut points: multiples of `sqrt(ln q)/N` in `[C1 sqrt(ln q), C2 sqrt(ln q)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_grid: usize,
    pub spacing: f64,
    pub c1: f64,
    pub c2: f64,
    pub points: Vec<f64>,
    /// All `A` identical; only the single-group split is meaningful.
    pub degenerate: bool,
}

/// `N = round(sqrt(ln q) / 0.1)`, at least 1.
pub fn default_grid_density(q: usize) -> usize {
    let root = (q as f64).ln().sqrt();
    ((root / TARGET_SPACING).round() as usize).max(1)
}

pub fn build_grid(a: &[f64], config: &GapConfig) -> Result<Grid> {
    let q = a.len();
    if q < 3 {
        return Err(Error::invalid(format!("grid needs q >= 3 links, got {q}")));
    }
    let root = (q as f64).ln().sqrt();
    let n_grid = config.n_grid.unwrap_or_else(|| default_grid_density(q));
    let spacing = root / n_grid as f64;
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (c1, c2) = config.c_bounds.unwrap_or((min / root, max / root));
    let c1 = c1.clamp(-GRID_BOUND, GRID_BOUND);
    let c2 = c2.clamp(-GRID_BOUND, GRID_BOUND);
    let degenerate = min == max;
    let points = if degenerate {
        Vec::new()
    } else {
        let lo = (c1 * n_grid as f64).ceil() as i64;
        let hi = (c2 * n_grid as f64).floor() as i64;
        (lo..=hi).map(|j| j as f64 * spacing).collect()
    };
    Ok(Grid {
        n_grid,
        spacing,
        c1,
        c2,
        points,
        degenerate,
    })
}

/// Index of the group containing `a`: the number of cut points strictly below it.
fn group_of(a: f64, lambdas: &[f64]) -> usize {
    lambdas.partition_point(|&l| l < a)
}

/// `G_k = {i : lambda_{k-1} < A_i <= lambda_k}` for `k = 1..=K`.
pub fn partition_groups(a: &[f64], lambdas: &[f64]) -> Result<Vec<Vec<usize>>> {
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("cut points must be strictly increasing"));
    }
    let mut groups = vec![Vec::new(); lambdas.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        groups[group_of(x, lambdas)].push(i);
    }
    Ok(groups)
}

fn clamp_proportion(raw: f64, epsilon: f64) -> f64 {
    raw.max(epsilon).min(1.0 - epsilon)
}

fn alt_proportion_from_counts(size: usize, above: usize, storey_lambda: f64, epsilon: f64) -> f64 {
    if size == 0 {
        return epsilon;
    }
    let raw = 1.0 - above as f64 / ((1.0 - storey_lambda) * size as f64);
    clamp_proportion(raw, epsilon)
}

/// Storey-type alternative proportion `1 - #{p > lambda} / ((1 - lambda) q_k)`,
/// clamped to `[epsilon, 1 - epsilon]`; an empty group gets `epsilon`.
pub fn estimate_alt_proportion(pvalues: &[f64], storey_lambda: f64, epsilon: f64) -> f64 {
    let above = pvalues.iter().filter(|&&p| p > storey_lambda).count();
    alt_proportion_from_counts(pvalues.len(), above, storey_lambda, epsilon)
}

/// Per-group weights `q o_k / sum_j q_j o_j`.
pub fn group_weights(sizes: &[usize], pi_hat: &[f64]) -> Vec<f64> {
    let q: usize = sizes.iter().sum();
    let odds: Vec<f64> = pi_hat.iter().map(|&p| p / (1.0 - p)).collect();
    let norm: f64 = sizes.iter().zip(&odds).map(|(&n, &o)| n as f64 * o).sum();
    odds.iter().map(|&o| q as f64 * o / norm).collect()
}

/// A concrete grouping with its estimated proportions and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    pub lambdas: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub sizes: Vec<usize>,
    pub pi_hat: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GroupPartition {
    pub fn build(a: &[f64], pvalues: &[f64], lambdas: &[f64], config: &GapConfig) -> Result<Self> {
        let groups = partition_groups(a, lambdas)?;
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let pi_hat: Vec<f64> = groups
            .iter()
            .map(|g| {
                let ps: Vec<f64> = g.iter().map(|&i| pvalues[i]).collect();
                estimate_alt_proportion(&ps, config.storey_lambda, config.epsilon)
            })
            .collect();
        let weights = group_weights(&sizes, &pi_hat);
        Ok(Self {
            lambdas: lambdas.to_vec(),
            groups,
            sizes,
            pi_hat,
            weights,
        })
    }

    /// Weight of every link.
    pub fn link_weights(&self) -> Vec<f64> {
        let q = self.sizes.iter().sum();
        let mut w = vec![0.0; q];
        for (g, &wk) in self.groups.iter().zip(&self.weights) {
            for &i in g {
                w[i] = wk;
            }
        }
        w
    }
}

/// Per-link weights from a partition.
pub fn compute_weights(partition: &GroupPartition) -> Vec<f64> {
    partition.link_weights()
}

/// `min(p_i / w_i, 1)`.
pub fn adjust_pvalues(p: &[f64], w: &[f64]) -> Vec<f64> {
    p.iter().zip(w).map(|(&p, &w)| (p / w).min(1.0)).collect()
}

/// BH critical line `alpha * r / q`; shared by every BH evaluation so that
/// all of them compare against identical floating-point values.
#[inline]
fn bh_line(alpha: f64, r: usize, q: usize) -> f64 {
    alpha * r as f64 / q as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhOutcome {
    /// `max{i : p_(i) <= alpha i / q}`, 0 if none.
    pub tau: usize,
    /// `p_(tau)`, the largest rejected value.
    pub cutoff: Option<f64>,
    /// Rejected indices, ascending.
    pub rejected: Vec<usize>,
}

/// Benjamini-Hochberg step-up. All indices with `p <= p_(tau)` are rejected,
/// so tied values move together.
pub fn bh_procedure(pvalues: &[f64], alpha: f64) -> BhOutcome {
    let q = pvalues.len();
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tau = (1..=q)
        .rev()
        .find(|&i| sorted[i - 1] <= bh_line(alpha, i, q))
        .unwrap_or(0);
    if tau == 0 {
        return BhOutcome {
            tau,
            cutoff: None,
            rejected: Vec::new(),
        };
    }
    let cutoff = sorted[tau - 1];
    let rejected = (0..q).filter(|&i| pvalues[i] <= cutoff).collect();
    BhOutcome {
        tau,
        cutoff: Some(cutoff),
        rejected,
    }
}

/// One scanned choice of cut points.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEval {
    pub lambdas: Vec<f64>,
    pub sizes: Vec<usize>,
    pub pi_hat: Vec<f64>,
    pub weights: Vec<f64>,
    pub rejections: usize,
}

/// Summary of the winning grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedDetail {
    pub k_effective: usize,
    pub grid_len: usize,
    pub grid_spacing: f64,
    pub candidates_scanned: usize,
    pub lambdas: Vec<f64>,
    pub group_sizes: Vec<usize>,
    pub pi_hat: Vec<f64>,
    pub group_weights: Vec<f64>,
    #[serde(skip)]
    pub adjusted_pvalues: Vec<f64>,
}

/// Links sorted by `A` so every group is a contiguous range.
struct SortedLinks<'a> {
    order: Vec<usize>,
    a_sorted: Vec<f64>,
    pvalues: &'a [f64],
    /// `above[i]` = #{p > storey_lambda} among the first `i` sorted links.
    above: Vec<usize>,
}

impl<'a> SortedLinks<'a> {
    fn new(a: &[f64], pvalues: &'a [f64], storey_lambda: f64) -> Self {
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(i.cmp(&j)));
        let a_sorted = order.iter().map(|&i| a[i]).collect();
        let mut above = Vec::with_capacity(a.len() + 1);
        above.push(0);
        for &i in &order {
            let last = *above.last().unwrap();
            above.push(last + usize::from(pvalues[i] > storey_lambda));
        }
        Self {
            order,
            a_sorted,
            pvalues,
            above,
        }
    }

    fn q(&self) -> usize {
        self.order.len()
    }

    /// Number of links with `A <= lambda`.
    fn split(&self, lambda: f64) -> usize {
        self.a_sorted.partition_point(|&x| x <= lambda)
    }
}

/// Counts BH rejections for a grouping without sorting all links.
///
/// The sorted-by-`A` sequence is cut into blocks at every position a group
/// boundary can take, and p-values are sorted within each block. A group is a
/// run of blocks, and only the prefix of each block whose weighted p-value can
/// still reach the BH line is visited.
struct BhCounter {
    q: usize,
    /// `lines[r]` = `alpha r / q`, with `lines[0]` unused.
    lines: Vec<f64>,
    scale: f64,
    starts: Vec<usize>,
    block_p: Vec<f64>,
    scratch: Vec<f64>,
    buckets: Vec<usize>,
}

impl BhCounter {
    fn new(links: &SortedLinks<'_>, cuts: &[usize], alpha: f64) -> Self {
        let q = links.q();
        let mut starts: Vec<usize> = cuts.iter().copied().chain([0, q]).collect();
        starts.sort_unstable();
        starts.dedup();
        let mut block_p: Vec<f64> = links.order.iter().map(|&i| links.pvalues[i]).collect();
        for w in starts.windows(2) {
            block_p[w[0]..w[1]].sort_by(f64::total_cmp);
        }
        Self {
            q,
            lines: (0..=q).map(|r| bh_line(alpha, r, q)).collect(),
            scale: q as f64 / alpha,
            starts,
            block_p,
            scratch: Vec::new(),
            buckets: Vec::new(),
        }
    }

    /// Smallest `r` in `1..=q` with `pw <= alpha r / q`.
    #[inline]
    fn bucket(&self, pw: f64) -> Option<usize> {
        let q = self.q;
        if pw <= self.lines[1] {
            return Some(1);
        }
        // truncation lands within one of the answer; the table fixes it up
        let guess = pw * self.scale;
        let mut r = if guess < q as f64 {
            guess as usize + 1
        } else {
            q + 1
        };
        while r > 1 && pw <= self.lines[r - 1] {
            r -= 1;
        }
        while r <= q && !(pw <= self.lines[r]) {
            r += 1;
        }
        (r <= q).then_some(r)
    }

    fn block(&self, position: usize) -> usize {
        self.starts
            .binary_search(&position)
            .expect("group boundary is a block start")
    }

    /// BH rejection count when sorted positions `bounds[k]..bounds[k+1]` carry
    /// weight `weights[k]`.
    fn count(&mut self, bounds: &[usize], weights: &[f64]) -> usize {
        let top = self.lines[self.q];
        self.scratch.clear();
        for (k, &w) in weights.iter().enumerate() {
            let (first, last) = (self.block(bounds[k]), self.block(bounds[k + 1]));
            for b in first..last {
                for &p in &self.block_p[self.starts[b]..self.starts[b + 1]] {
                    let pw = (p / w).min(1.0);
                    if !(pw <= top) {
                        break;
                    }
                    self.scratch.push(pw);
                }
            }
        }
        // at most `m` values can be rejected, so larger buckets never matter
        let m = self.scratch.len();
        self.buckets.clear();
        self.buckets.resize(m + 1, 0);
        for i in 0..m {
            if let Some(r) = self.bucket(self.scratch[i]) {
                if r <= m {
                    self.buckets[r] += 1;
                }
            }
        }
        let mut cumulative = 0;
        let mut tau = 0;
        for r in 1..=m {
            cumulative += self.buckets[r];
            if cumulative >= r {
                tau = r;
            }
        }
        tau
    }
}

/// Scan every admissible choice of `K - 1` cut points and report each one.
///
/// Cut points that fall between the same pair of sorted `A` values induce the
/// same groups, so only the lexicographically smallest representative of each
/// distinct grouping is evaluated. Candidates are visited in lexicographic
/// order of their cut points. Returns the effective `K` used.
pub fn scan_candidates(
    a: &[f64],
    pvalues: &[f64],
    grid: &Grid,
    config: &GapConfig,
    mut visit: impl FnMut(&CandidateEval),
) -> Result<usize> {
    config.validate()?;
    let q = a.len();
    if pvalues.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: pvalues.len(),
            context: "p-values vs auxiliary statistics".into(),
        });
    }
    let k_eff = if grid.degenerate || grid.points.is_empty() {
        1
    } else {
        config.k_groups.min(grid.points.len() + 1)
    };
    let links = SortedLinks::new(a, pvalues, config.storey_lambda);
    let splits: Vec<usize> = grid.points.iter().map(|&l| links.split(l)).collect();
    let mut counter = BhCounter::new(&links, &splits, config.alpha);

    let mut chosen: Vec<usize> = Vec::with_capacity(k_eff - 1);
    let mut bounds = vec![0; k_eff + 1];
    let mut eval = |chosen: &[usize], counter: &mut BhCounter| {
        bounds[0] = 0;
        for (slot, &g) in chosen.iter().enumerate() {
            bounds[slot + 1] = splits[g];
        }
        bounds[k_eff] = q;
        let sizes: Vec<usize> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
        let pi_hat: Vec<f64> = bounds
            .windows(2)
            .map(|w| {
                let above = links.above[w[1]] - links.above[w[0]];
                alt_proportion_from_counts(w[1] - w[0], above, config.storey_lambda, config.epsilon)
            })
            .collect();
        let weights = group_weights(&sizes, &pi_hat);
        let rejections = counter.count(&bounds, &weights);
        visit(&CandidateEval {
            lambdas: chosen.iter().map(|&g| grid.points[g]).collect(),
            sizes,
            pi_hat,
            weights,
            rejections,
        });
    };

    fn recurse(
        depth: usize,
        start: usize,
        splits: &[usize],
        chosen: &mut Vec<usize>,
        counter: &mut BhCounter,
        eval: &mut dyn FnMut(&[usize], &mut BhCounter),
    ) {
        if depth == 0 {
            eval(chosen, counter);
            return;
        }
        // smallest representative: the next point itself, then the first
        // point of every later run of equal splits
        let n = splits.len();
        for g in start..n {
            if g != start && splits[g] == splits[g - 1] {
                continue;
            }
            if n - g < depth {
                break;
            }
            chosen.push(g);
            recurse(depth - 1, g + 1, splits, chosen, counter, eval);
            chosen.pop();
        }
    }

    recurse(k_eff - 1, 0, &splits, &mut chosen, &mut counter, &mut eval);
    Ok(k_eff)
}

/// Full power-enhanced procedure on test statistics `t` and auxiliary
/// statistics `a`.
pub fn run_enhanced_test(t: &[f64], a: &[f64], config: &GapConfig) -> Result<MultipleTestResult> {
    config.validate()?;
    if t.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: a.len(),
            context: "auxiliary statistics vs test statistics".into(),
        });
    }
    let pvalues = two_sided_pvalues(t);
    let grid = build_grid(a, config)?;

    let mut best: Option<CandidateEval> = None;
    let mut scanned = 0;
    let k_eff = scan_candidates(a, &pvalues, &grid, config, |c| {
        scanned += 1;
        if best.as_ref().is_none_or(|b| c.rejections > b.rejections) {
            best = Some(c.clone());
        }
    })?;
    let best = best.ok_or_else(|| Error::Invariant("no grouping was scanned".into()))?;

    let partition = GroupPartition::build(a, &pvalues, &best.lambdas, config)?;
    let adjusted = adjust_pvalues(&pvalues, &partition.link_weights());
    let bh = bh_procedure(&adjusted, config.alpha);
    if bh.rejected.len() != best.rejections {
        return Err(Error::Invariant(format!(
            "re-running BH on the winning grouping gave {} rejections, the scan recorded {}",
            bh.rejected.len(),
            best.rejections
        )));
    }

    Ok(MultipleTestResult {
        method: Method::Enhanced,
        alpha: config.alpha,
        rejected: bh.rejected,
        threshold: bh.cutoff.unwrap_or(0.0),
        estimated_fdp: None,
        enhanced: Some(EnhancedDetail {
            k_effective: k_eff,
            grid_len: grid.points.len(),
            grid_spacing: grid.spacing,
            candidates_scanned: scanned,
            lambdas: partition.lambdas,
            group_sizes: partition.sizes,
            pi_hat: partition.pi_hat,
            group_weights: partition.weights,
            adjusted_pvalues: adjusted,
        }),
    })
}
