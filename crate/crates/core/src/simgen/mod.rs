//! Simulated two-group network data with known truth.
//!
//! Every family uses the same support layout: three disjoint link sets drawn
//! uniformly per replication, `first_only` (signal only in group 1),
//! `second_only` (signal only in group 2) and `shared` (signal in both). Links
//! outside all three share the baseline in both groups.

mod wishart;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

pub use wishart::{
    sample_correlation_network, sigma_from_support, transform_count, wishart_sample, ZeroCountRule,
    OVERFLOW_GUARD,
};

use crate::error::{Error, Result};
use crate::netdata::{link_count, Group, LinkIndexMap, NetworkSampleStack, SquareMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bernoulli,
    BernoulliMixture,
    Poisson,
    LogNormal,
    TransformedWishart,
    CorrelationNetwork,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Bernoulli,
        Family::BernoulliMixture,
        Family::Poisson,
        Family::LogNormal,
        Family::TransformedWishart,
        Family::CorrelationNetwork,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Bernoulli => "bernoulli",
            Family::BernoulliMixture => "bernoulli-mixture",
            Family::Poisson => "poisson",
            Family::LogNormal => "log-normal",
            Family::TransformedWishart => "transformed-wishart",
            Family::CorrelationNetwork => "correlation-network",
        }
    }

    /// Covariance-driven families use quarter-sized single-group supports.
    fn covariance_driven(self) -> bool {
        matches!(
            self,
            Family::TransformedWishart | Family::CorrelationNetwork
        )
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown family '{s}'")))
    }
}

/// Per-family parameters. Every field has a default so config files only
/// need to name what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyParams {
    /// Probability that a signal link takes the "other" group's level.
    pub flip_prob: f64,
    pub bernoulli_base: f64,
    pub bernoulli_low: f64,
    pub bernoulli_high: f64,
    pub mixture_low: f64,
    pub mixture_high: f64,
    /// Offset between the two mixture components.
    pub mixture_shift: f64,
    pub poisson_base: f64,
    pub poisson_low: f64,
    pub poisson_high: f64,
    pub lognormal_base: f64,
    pub lognormal_low: f64,
    pub lognormal_high: f64,
    pub lognormal_sd: f64,
    pub wishart_dof: usize,
    pub sigma_low: f64,
    pub sigma_high: f64,
    /// Added to `|lambda_min|` on the diagonal of the covariance.
    pub sigma_ridge: f64,
    pub zero_count: ZeroCountRule,
    /// Columns of the latent data matrix for correlation networks.
    pub columns: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            flip_prob: 0.1,
            bernoulli_base: 0.3,
            bernoulli_low: 0.5,
            bernoulli_high: 0.8,
            mixture_low: 0.5,
            mixture_high: 0.7,
            mixture_shift: 0.2,
            poisson_base: 3.0,
            poisson_low: 4.0,
            poisson_high: 6.0,
            lognormal_base: 0.0,
            lognormal_low: 0.5,
            lognormal_high: 1.0,
            lognormal_sd: 1.0,
            wishart_dof: 100,
            sigma_low: 3.0,
            sigma_high: 5.0,
            sigma_ridge: 0.5,
            zero_count: ZeroCountRule::default(),
            columns: 100,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg()))
    }
}

fn is_probability(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

impl FamilyParams {
    pub fn validate(&self, family: Family, p: usize) -> Result<()> {
        check((0.0..=1.0).contains(&self.flip_prob), || {
            format!("flip_prob must lie in [0, 1], got {}", self.flip_prob)
        })?;
        match family {
            Family::Bernoulli => {
                for (name, v) in [
                    ("bernoulli_base", self.bernoulli_base),
                    ("bernoulli_low", self.bernoulli_low),
                    ("bernoulli_high", self.bernoulli_high),
                ] {
                    check(is_probability(v), || {
                        format!("{name} must lie in (0, 1), got {v}")
                    })?;
                }
            }
            Family::BernoulliMixture => {
                check(is_probability(self.bernoulli_base), || {
                    format!(
                        "bernoulli_base must lie in (0, 1), got {}",
                        self.bernoulli_base
                    )
                })?;
                for (name, v) in [
                    ("mixture_low", self.mixture_low),
                    ("mixture_high", self.mixture_high),
                ] {
                    check(
                        is_probability(v) && is_probability(v + self.mixture_shift),
                        || format!("{name} and {name} + mixture_shift must lie in (0, 1), got {v}"),
                    )?;
                }
            }
            Family::Poisson => {
                for (name, v) in [
                    ("poisson_base", self.poisson_base),
                    ("poisson_low", self.poisson_low),
                    ("poisson_high", self.poisson_high),
                ] {
                    check(v > 0.0 && v.is_finite(), || {
                        format!("{name} must be a positive mean, got {v}")
                    })?;
                }
            }
            Family::LogNormal => {
                check(
                    self.lognormal_sd > 0.0 && self.lognormal_sd.is_finite(),
                    || format!("lognormal_sd must be positive, got {}", self.lognormal_sd),
                )?;
                for v in [self.lognormal_base, self.lognormal_low, self.lognormal_high] {
                    check(v.is_finite(), || "log-normal means must be finite".into())?;
                }
            }
            Family::TransformedWishart | Family::CorrelationNetwork => {
                check(
                    self.sigma_low.is_finite()
                        && self.sigma_high.is_finite()
                        && self.sigma_low < self.sigma_high,
                    || {
                        format!(
                            "need sigma_low < sigma_high, got ({}, {})",
                            self.sigma_low, self.sigma_high
                        )
                    },
                )?;
                check(self.sigma_ridge > 0.0, || {
                    format!("sigma_ridge must be positive, got {}", self.sigma_ridge)
                })?;
                if family == Family::TransformedWishart {
                    check(self.wishart_dof >= p, || {
                        format!("wishart_dof must be >= p = {p}, got {}", self.wishart_dof)
                    })?;
                } else {
                    check(self.columns >= 2, || {
                        format!("columns must be >= 2, got {}", self.columns)
                    })?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    /// Sparsity level; the support sets are sized from it.
    pub k_q: usize,
    #[serde(default)]
    pub params: FamilyParams,
    pub seed: u64,
}

/// Sizes of the disjoint support sets for a family and sparsity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportSizes {
    pub first_only: usize,
    pub second_only: usize,
    pub shared: usize,
}

impl SupportSizes {
    /// `k/2` each for the mean families; `k/4` per group and `3k/4` shared for
    /// the covariance families. Each size is rounded down.
    pub fn for_family(family: Family, k_q: usize) -> Self {
        if family.covariance_driven() {
            Self {
                first_only: k_q / 4,
                second_only: k_q / 4,
                shared: 3 * k_q / 4,
            }
        } else {
            Self {
                first_only: k_q / 2,
                second_only: k_q / 2,
                shared: k_q / 2,
            }
        }
    }

    pub fn total(&self) -> usize {
        self.first_only + self.second_only + self.shared
    }
}

/// `round(fraction * q)`, the sparsity level for a fraction of all links.
pub fn k_from_fraction(q: usize, fraction: f64) -> usize {
    (fraction * q as f64).round() as usize
}

impl ScenarioSpec {
    pub fn new(family: Family, p: usize, n: usize, k_q: usize, seed: u64) -> Self {
        Self {
            family,
            p,
            n1: n,
            n2: n,
            k_q,
            params: FamilyParams::default(),
            seed,
        }
    }

    pub fn q(&self) -> usize {
        link_count(self.p)
    }

    pub fn support_sizes(&self) -> SupportSizes {
        SupportSizes::for_family(self.family, self.k_q)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.p >= 2, || format!("p must be >= 2, got {}", self.p))?;
        check(self.n1 >= 2 && self.n2 >= 2, || {
            format!("group sizes must be >= 2, got ({}, {})", self.n1, self.n2)
        })?;
        check(self.k_q <= self.q(), || {
            format!("k_q = {} exceeds q = {}", self.k_q, self.q())
        })?;
        let total = self.support_sizes().total();
        check(total <= self.q(), || {
            format!(
                "support sets need {total} distinct links but q = {}",
                self.q()
            )
        })?;
        self.params.validate(self.family, self.p)
    }
}

/// Ground truth of one replication. Link sets hold flat indices, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTruth {
    /// Mean networks (covariance for the covariance families).
    pub s1: SquareMatrix,
    pub s2: SquareMatrix,
    /// Links whose constructed means differ, compared exactly.
    pub h1_set: Vec<usize>,
    pub first_only: Vec<usize>,
    pub second_only: Vec<usize>,
    pub shared: Vec<usize>,
}

impl ScenarioTruth {
    fn from_means(
        map: &LinkIndexMap,
        s1: SquareMatrix,
        s2: SquareMatrix,
        sets: SupportSets,
    ) -> Self {
        let h1_set = map
            .pairs()
            .enumerate()
            .filter(|&(_, (i, j))| s1.get(i, j) != s2.get(i, j))
            .map(|(k, _)| k)
            .collect();
        Self {
            s1,
            s2,
            h1_set,
            first_only: sets.first_only,
            second_only: sets.second_only,
            shared: sets.shared,
        }
    }

    /// Union support of group `d`: its own set plus the shared one, ascending.
    pub fn support(&self, group: Group) -> Vec<usize> {
        let own = match group {
            Group::First => &self.first_only,
            Group::Second => &self.second_only,
        };
        let mut all: Vec<usize> = own.iter().chain(&self.shared).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Data and truth of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub stack1: NetworkSampleStack,
    pub stack2: NetworkSampleStack,
    pub truth: ScenarioTruth,
}

/// Generator for replication `r` of a scenario: the master seed selects the
/// key and the replication index the stream, so replications are independent
/// of each other and of evaluation order.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, PartialEq)]
struct SupportSets {
    first_only: Vec<usize>,
    second_only: Vec<usize>,
    shared: Vec<usize>,
}

/// Per-link role in the support layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Off,
    FirstOnly,
    SecondOnly,
    Shared,
}

impl Role {
    fn in_first(self) -> bool {
        matches!(self, Role::FirstOnly | Role::Shared)
    }

    fn in_second(self) -> bool {
        matches!(self, Role::SecondOnly | Role::Shared)
    }
}

fn draw_supports(q: usize, sizes: SupportSizes, rng: &mut ChaCha8Rng) -> (SupportSets, Vec<Role>) {
    let picked = index::sample(rng, q, sizes.total()).into_vec();
    let (a, rest) = picked.split_at(sizes.first_only);
    let (b, c) = rest.split_at(sizes.second_only);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    let mut roles = vec![Role::Off; q];
    for &k in a {
        roles[k] = Role::FirstOnly;
    }
    for &k in b {
        roles[k] = Role::SecondOnly;
    }
    for &k in c {
        roles[k] = Role::Shared;
    }
    (
        SupportSets {
            first_only: sorted(a),
            second_only: sorted(b),
            shared: sorted(c),
        },
        roles,
    )
}

fn links_to_matrix(map: &LinkIndexMap, links: &[f64]) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(map.p());
    for (k, (i, j)) in map.pairs().enumerate() {
        m.set(i, j, links[k]);
        m.set(j, i, links[k]);
    }
    m
}

/// Signal level for group 1 (`low` with probability `flip`, else `high`) and
/// group 2 (mirrored).
fn signal_level(group: Group, low: f64, high: f64, flip: f64, rng: &mut ChaCha8Rng) -> f64 {
    let flipped = rng.random::<f64>() < flip;
    match (group, flipped) {
        (Group::First, true) | (Group::Second, false) => low,
        (Group::First, false) | (Group::Second, true) => high,
    }
}

/// Per-link means for the mean-driven families.
fn mean_links(spec: &ScenarioSpec, roles: &[Role], rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let par = &spec.params;
    let (base, low, high) = match spec.family {
        Family::Bernoulli => (par.bernoulli_base, par.bernoulli_low, par.bernoulli_high),
        Family::BernoulliMixture => (par.bernoulli_base, par.mixture_low, par.mixture_high),
        Family::Poisson => (par.poisson_base, par.poisson_low, par.poisson_high),
        Family::LogNormal => (par.lognormal_base, par.lognormal_low, par.lognormal_high),
        _ => unreachable!("covariance families have no mean links"),
    };
    let q = roles.len();
    let mut m1 = vec![base; q];
    let mut m2 = vec![base; q];
    for (k, &role) in roles.iter().enumerate() {
        // drawn for every link so the stream does not depend on the layout
        let weight = if spec.family == Family::BernoulliMixture {
            rng.random::<f64>()
        } else {
            1.0
        };
        let level = |group: Group, rng: &mut ChaCha8Rng| {
            let first = signal_level(group, low, high, par.flip_prob, rng);
            if spec.family == Family::BernoulliMixture {
                weight * first + (1.0 - weight) * (first + par.mixture_shift)
            } else {
                first
            }
        };
        if role.in_first() {
            m1[k] = level(Group::First, rng);
        }
        if role.in_second() {
            m2[k] = level(Group::Second, rng);
        }
    }
    (m1, m2)
}

fn sample_mean_stack(
    spec: &ScenarioSpec,
    group: Group,
    map: &LinkIndexMap,
    means: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<NetworkSampleStack> {
    let n = match group {
        Group::First => spec.n1,
        Group::Second => spec.n2,
    };
    let q = means.len();
    let mut links = Vec::with_capacity(n * q);
    match spec.family {
        Family::Bernoulli | Family::BernoulliMixture => {
            for _ in 0..n {
                links.extend(
                    means
                        .iter()
                        .map(|&r| f64::from(u8::from(rng.random::<f64>() < r))),
                );
            }
        }
        Family::Poisson => {
            let dists = means
                .iter()
                .map(|&m| {
                    Poisson::new(m).map_err(|e| Error::invalid(format!("Poisson mean {m}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..n {
                links.extend(dists.iter().map(|d| d.sample(rng)));
            }
        }
        Family::LogNormal => {
            let sd = spec.params.lognormal_sd;
            let dists = means
                .iter()
                .map(|&m| {
                    Normal::new(m, sd)
                        .map_err(|e| Error::invalid(format!("normal({m}, {sd}): {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..n {
                links.extend(dists.iter().map(|d| d.sample(rng)));
            }
        }
        _ => unreachable!("covariance families are sampled separately"),
    }
    NetworkSampleStack::from_flat(group, map.clone(), n, links)
}

/// Per-link i.i.d. Poisson or normal (already log-transformed) draws.
pub fn poisson_and_lognormal_links(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(NetworkSampleStack, NetworkSampleStack, ScenarioTruth)> {
    if !matches!(spec.family, Family::Poisson | Family::LogNormal) {
        return Err(Error::invalid(format!(
            "expected the poisson or log-normal family, got {}",
            spec.family
        )));
    }
    spec.validate()?;
    generate_mean_family(spec, rng)
}

fn generate_mean_family(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(NetworkSampleStack, NetworkSampleStack, ScenarioTruth)> {
    let map = LinkIndexMap::new(spec.p)?;
    let (sets, roles) = draw_supports(map.q(), spec.support_sizes(), rng);
    let (m1, m2) = mean_links(spec, &roles, rng);
    let stack1 = sample_mean_stack(spec, Group::First, &map, &m1, rng)?;
    let stack2 = sample_mean_stack(spec, Group::Second, &map, &m2, rng)?;
    let truth = ScenarioTruth::from_means(
        &map,
        links_to_matrix(&map, &m1),
        links_to_matrix(&map, &m2),
        sets,
    );
    Ok((stack1, stack2, truth))
}

fn generate_covariance_family(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(NetworkSampleStack, NetworkSampleStack, ScenarioTruth)> {
    let map = LinkIndexMap::new(spec.p)?;
    let (sets, _) = draw_supports(map.q(), spec.support_sizes(), rng);
    let par = &spec.params;
    let support1: Vec<usize> = sets
        .first_only
        .iter()
        .chain(&sets.shared)
        .copied()
        .collect();
    let support2: Vec<usize> = sets
        .second_only
        .iter()
        .chain(&sets.shared)
        .copied()
        .collect();
    let sigma1 = sigma_from_support(
        &map,
        &support1,
        par.sigma_low,
        par.sigma_high,
        par.sigma_ridge,
        rng,
    )?;
    let sigma2 = sigma_from_support(
        &map,
        &support2,
        par.sigma_low,
        par.sigma_high,
        par.sigma_ridge,
        rng,
    )?;

    let mut stacks = Vec::with_capacity(2);
    for (group, sigma, n) in [
        (Group::First, &sigma1, spec.n1),
        (Group::Second, &sigma2, spec.n2),
    ] {
        let mut links = Vec::with_capacity(n * map.q());
        match spec.family {
            Family::TransformedWishart => {
                let dof = par.wishart_dof;
                let scale = sigma / dof as f64;
                for _ in 0..n {
                    let s = wishart_sample(&scale, dof, rng)?;
                    links.extend(
                        map.pairs()
                            .map(|(i, j)| transform_count(s[(i, j)], par.zero_count)),
                    );
                }
            }
            Family::CorrelationNetwork => {
                let chol = nalgebra::Cholesky::new(sigma.clone()).ok_or_else(|| {
                    Error::Invariant("covariance is not positive definite".into())
                })?;
                let l = chol.l();
                for _ in 0..n {
                    let z = nalgebra::DMatrix::from_fn(map.p(), par.columns, |_, _| {
                        rng.sample::<f64, _>(rand_distr::StandardNormal)
                    });
                    let s = sample_correlation_network(&(&l * z))?;
                    links.extend(map.pairs().map(|(i, j)| s[(i, j)]));
                }
            }
            _ => unreachable!("mean families are sampled separately"),
        }
        stacks.push(NetworkSampleStack::from_flat(group, map.clone(), n, links)?);
    }
    let stack2 = stacks.pop().unwrap();
    let stack1 = stacks.pop().unwrap();
    let to_square = |m: &nalgebra::DMatrix<f64>| {
        let p = m.nrows();
        SquareMatrix::from_row_major(p, (0..p * p).map(|x| m[(x / p, x % p)]).collect())
    };
    let truth = ScenarioTruth::from_means(&map, to_square(&sigma1)?, to_square(&sigma2)?, sets);
    Ok((stack1, stack2, truth))
}

/// Draw replication `replication` of `spec`. Identical inputs give
/// bit-identical output.
pub fn generate_scenario(spec: &ScenarioSpec, replication: u64) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = replication_rng(spec.seed, replication);
    let (stack1, stack2, truth) = if spec.family.covariance_driven() {
        generate_covariance_family(spec, &mut rng)?
    } else {
        generate_mean_family(spec, &mut rng)?
    };
    Ok(Scenario {
        stack1,
        stack2,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family) -> ScenarioSpec {
        let q = link_count(20);
        ScenarioSpec::new(family, 20, 10, k_from_fraction(q, 0.2), 99)
    }

    #[test]
    fn sparsity_levels_for_68_nodes() {
        assert_eq!(k_from_fraction(2278, 0.2), 456);
        assert_eq!(k_from_fraction(2278, 0.15), 342);
        assert_eq!(k_from_fraction(2278, 0.1), 228);
        let s = SupportSizes::for_family(Family::TransformedWishart, 342);
        assert_eq!((s.first_only, s.second_only, s.shared), (85, 85, 256));
    }

    #[test]
    fn support_sizes_and_disjointness() {
        for family in Family::ALL {
            let spec = spec(family);
            let sizes = spec.support_sizes();
            for rep in 0..3 {
                let t = generate_scenario(&spec, rep).unwrap().truth;
                assert_eq!(t.first_only.len(), sizes.first_only);
                assert_eq!(t.second_only.len(), sizes.second_only);
                assert_eq!(t.shared.len(), sizes.shared);
                let mut all: Vec<usize> = t
                    .first_only
                    .iter()
                    .chain(&t.second_only)
                    .chain(&t.shared)
                    .copied()
                    .collect();
                all.sort_unstable();
                all.dedup();
                assert_eq!(all.len(), sizes.total(), "{family}");
            }
        }
    }

    #[test]
    fn bernoulli_truth_layout() {
        let spec = spec(Family::Bernoulli);
        let sc = generate_scenario(&spec, 0).unwrap();
        let t = &sc.truth;
        let map = LinkIndexMap::new(20).unwrap();
        let off: Vec<usize> = (0..map.q())
            .filter(|k| {
                !t.first_only.contains(k) && !t.second_only.contains(k) && !t.shared.contains(k)
            })
            .collect();
        for &k in &off {
            let (i, j) = map.unflatten(k).unwrap();
            assert_eq!(t.s1.get(i, j), 0.3);
            assert_eq!(t.s2.get(i, j), 0.3);
            assert!(!t.h1_set.contains(&k));
        }
        for &k in t.first_only.iter().chain(&t.second_only) {
            assert!(t.h1_set.contains(&k));
        }
        for &k in &t.shared {
            let (i, j) = map.unflatten(k).unwrap();
            assert_eq!(t.h1_set.contains(&k), t.s1.get(i, j) != t.s2.get(i, j));
        }
        assert!(sc.stack1.as_flat().iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn zero_sparsity_is_pure_null() {
        let mut s = spec(Family::Bernoulli);
        s.k_q = 0;
        assert!(generate_scenario(&s, 0).unwrap().truth.h1_set.is_empty());
    }

    #[test]
    fn determinism_per_replication() {
        for family in Family::ALL {
            let s = spec(family);
            assert_eq!(
                generate_scenario(&s, 4).unwrap(),
                generate_scenario(&s, 4).unwrap()
            );
            assert_ne!(
                generate_scenario(&s, 4).unwrap().stack1,
                generate_scenario(&s, 5).unwrap().stack1
            );
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(Family::Bernoulli);
        s.params.bernoulli_low = 1.2;
        assert!(generate_scenario(&s, 0).is_err());
        let mut s = spec(Family::Poisson);
        s.params.poisson_base = 0.0;
        assert!(generate_scenario(&s, 0).is_err());
        let mut s = spec(Family::Bernoulli);
        s.n2 = 1;
        assert!(s.validate().is_err());
        let mut s = spec(Family::Bernoulli);
        s.k_q = 180;
        assert!(s.validate().is_err());
    }

    #[test]
    fn poisson_mean_matches() {
        let mut s = ScenarioSpec::new(Family::Poisson, 2, 100_000, 0, 1);
        s.params.poisson_base = 3.0;
        let mut rng = replication_rng(1, 0);
        let (s1, _, _) = poisson_and_lognormal_links(&s, &mut rng).unwrap();
        let mean = s1.as_flat().iter().sum::<f64>() / 100_000.0;
        assert!((mean - 3.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn lognormal_entries_are_normal_draws() {
        let s = ScenarioSpec::new(Family::LogNormal, 2, 50_000, 0, 2);
        let mut rng = replication_rng(2, 0);
        let (s1, _, t) = poisson_and_lognormal_links(&s, &mut rng).unwrap();
        assert_eq!(t.s1.get(0, 1), 0.0);
        let x = s1.as_flat();
        assert!(x.iter().any(|&v| v < 0.0));
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 0.03, "{mean}");
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("gaussian".parse::<Family>().is_err());
    }
}
