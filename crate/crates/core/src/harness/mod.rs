//! Monte Carlo replication loop, empirical FDR and power, reports,
//! configuration and real-data analysis.

mod config;
mod realdata;
mod report;

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{load_config, parse_config, FileConfig, ScenarioEntry};
pub use realdata::{analyze_real_data, AnalysisSettings, LinkRow, RealDataAnalysis, Transform};
pub use report::{emit_reports, parse_reports, write_reports, write_text, ReportFormat};

use crate::error::{Error, Result};
use crate::fdr::{run_baseline_test, Method};
use crate::gap::{run_enhanced_test, GapConfig};
use crate::global::run_global_test;
use crate::simgen::{generate_scenario, k_from_fraction, Family, ScenarioSpec, ScenarioTruth};
use crate::stats::LinkStatistics;

/// Outcome of one method on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: u64,
    pub fdp: f64,
    pub power: f64,
    pub n_rejections: usize,
    /// `h_hat` (baseline), largest rejected weighted p-value (enhanced) or
    /// `M_n` (global).
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub scenario: ScenarioSpec,
    pub method: Method,
    pub alpha: f64,
    /// Grouping settings, enhanced method only.
    pub gap: Option<GapConfig>,
    pub n_replications: usize,
    /// Replications with no true alternatives; their power is reported as 0.
    pub pure_null_replications: usize,
    pub per_replication: Vec<ReplicationRecord>,
    /// Percent.
    pub empirical_fdr: f64,
    /// Percent.
    pub empirical_power: f64,
    /// Monte Carlo standard errors of the two means above, in percent.
    pub fdr_se: f64,
    pub power_se: f64,
    /// Seconds; never written to machine formats.
    pub wall_time: Option<f64>,
}

fn mean_and_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

impl ReplicationReport {
    /// Aggregate records, sorted by replication index first.
    pub fn from_records(
        scenario: ScenarioSpec,
        method: Method,
        alpha: f64,
        gap: Option<GapConfig>,
        pure_null_replications: usize,
        mut records: Vec<ReplicationRecord>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("a report needs at least one replication"));
        }
        records.sort_by_key(|r| r.index);
        let (fdr, fdr_se) = mean_and_se(records.iter().map(|r| r.fdp));
        let (power, power_se) = mean_and_se(records.iter().map(|r| r.power));
        Ok(Self {
            scenario,
            method,
            alpha,
            gap,
            n_replications: records.len(),
            pure_null_replications,
            per_replication: records,
            empirical_fdr: 100.0 * fdr,
            empirical_power: 100.0 * power,
            fdr_se: 100.0 * fdr_se,
            power_se: 100.0 * power_se,
            wall_time: None,
        })
    }

    /// Fraction of replications with at least one rejection.
    pub fn rejection_rate(&self) -> f64 {
        let hits = self
            .per_replication
            .iter()
            .filter(|r| r.n_rejections > 0)
            .count();
        hits as f64 / self.n_replications as f64
    }
}

/// `(|R & H0| / max(|R|, 1), |R & H1| / |H1|)`, power 0 when `H1` is empty.
pub fn empirical_metrics(rejected: &[usize], truth: &ScenarioTruth) -> (f64, f64) {
    let h1: HashSet<usize> = truth.h1_set.iter().copied().collect();
    metrics_against(rejected, &h1)
}

fn metrics_against(rejected: &[usize], h1: &HashSet<usize>) -> (f64, f64) {
    let true_pos = rejected.iter().filter(|k| h1.contains(k)).count();
    let false_pos = rejected.len() - true_pos;
    let fdp = false_pos as f64 / rejected.len().max(1) as f64;
    let power = if h1.is_empty() {
        0.0
    } else {
        true_pos as f64 / h1.len() as f64
    };
    (fdp, power)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub alpha: f64,
    pub reps: usize,
    pub methods: Vec<Method>,
    /// Grouping settings for the enhanced method; its `alpha` is replaced by
    /// the one above.
    pub gap: GapConfig,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            reps: 100,
            methods: vec![Method::Baseline, Method::Enhanced],
            gap: GapConfig::default(),
            workers: None,
        }
    }
}

/// Every method on one replication's data.
fn evaluate_replication(
    spec: &ScenarioSpec,
    index: u64,
    methods: &[Method],
    gap: &GapConfig,
) -> Result<(bool, Vec<ReplicationRecord>)> {
    let scenario = generate_scenario(spec, index)?;
    let stats = LinkStatistics::compute(&scenario.stack1, &scenario.stack2)?;
    let h1: HashSet<usize> = scenario.truth.h1_set.iter().copied().collect();
    let records = methods
        .iter()
        .map(|&method| {
            let (fdp, power, n_rejections, threshold) = match method {
                Method::Global => {
                    let g = run_global_test(&stats.t, gap.alpha, stats.q())?;
                    // a rejection is a true discovery unless there is nothing to find
                    let fdp = f64::from(u8::from(g.reject && h1.is_empty()));
                    let power = f64::from(u8::from(g.reject && !h1.is_empty()));
                    (fdp, power, usize::from(g.reject), g.m_n)
                }
                Method::Baseline => {
                    let r = run_baseline_test(&stats.t, gap.alpha, stats.q())?;
                    let (fdp, power) = metrics_against(&r.rejected, &h1);
                    (fdp, power, r.n_rejections(), r.threshold)
                }
                Method::Enhanced => {
                    let r = run_enhanced_test(&stats.t, &stats.a, gap)?;
                    let (fdp, power) = metrics_against(&r.rejected, &h1);
                    (fdp, power, r.n_rejections(), r.threshold)
                }
            };
            Ok(ReplicationRecord {
                index,
                fdp,
                power,
                n_rejections,
                threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((h1.is_empty(), records))
}

/// Run `settings.reps` replications of `spec`, applying every method to the
/// same data. Output is identical for any number of workers.
pub fn run_methods(
    spec: &ScenarioSpec,
    settings: &SimulationSettings,
) -> Result<Vec<ReplicationReport>> {
    spec.validate()?;
    if settings.reps < 1 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    if settings.methods.is_empty() {
        return Err(Error::invalid("no methods selected"));
    }
    let gap = GapConfig {
        alpha: settings.alpha,
        ..settings.gap.clone()
    };
    gap.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<(bool, Vec<ReplicationRecord>)>> = pool.install(|| {
        (0..settings.reps as u64)
            .into_par_iter()
            .map(|index| evaluate_replication(spec, index, &settings.methods, &gap))
            .collect()
    });
    let mut pure_null = 0;
    let mut per_method: Vec<Vec<ReplicationRecord>> = vec![Vec::new(); settings.methods.len()];
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let (null_only, records) = outcome.map_err(|e| Error::Replication {
            index,
            source: Box::new(e),
        })?;
        pure_null += usize::from(null_only);
        for (slot, record) in per_method.iter_mut().zip(records) {
            slot.push(record);
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    settings
        .methods
        .iter()
        .zip(per_method)
        .map(|(&method, records)| {
            let mut report = ReplicationReport::from_records(
                spec.clone(),
                method,
                settings.alpha,
                (method == Method::Enhanced).then(|| gap.clone()),
                pure_null,
                records,
            )?;
            report.wall_time = Some(wall_time);
            Ok(report)
        })
        .collect()
}

/// Single-method convenience wrapper around [`run_methods`].
pub fn run_replications(
    spec: &ScenarioSpec,
    method: Method,
    alpha: f64,
    reps: usize,
    gap: &GapConfig,
    workers: Option<usize>,
) -> Result<ReplicationReport> {
    let settings = SimulationSettings {
        alpha,
        reps,
        methods: vec![method],
        gap: gap.clone(),
        workers,
    };
    Ok(run_methods(spec, &settings)?.remove(0))
}

/// Sparsity levels of the reference simulation grid, as fractions of `q`.
pub const GRID_FRACTIONS: [f64; 3] = [0.2, 0.15, 0.1];
/// Group sizes of the reference simulation grid.
pub const GRID_SAMPLE_SIZES: [usize; 2] = [100, 25];
/// Families of the reference simulation grid.
pub const GRID_FAMILIES: [Family; 3] = [
    Family::Bernoulli,
    Family::BernoulliMixture,
    Family::TransformedWishart,
];

/// The reference grid on 68 nodes: family x group size x sparsity.
pub fn reference_grid(seed: u64) -> Vec<ScenarioSpec> {
    let p = 68;
    let q = crate::netdata::link_count(p);
    let mut specs = Vec::new();
    for family in GRID_FAMILIES {
        for n in GRID_SAMPLE_SIZES {
            for fraction in GRID_FRACTIONS {
                specs.push(ScenarioSpec::new(
                    family,
                    p,
                    n,
                    k_from_fraction(q, fraction),
                    seed,
                ));
            }
        }
    }
    specs
}
