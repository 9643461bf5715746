//! Observed two-group data: load, optionally transform, test, tabulate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::real;
use super::ReportFormat;
use crate::error::{Error, Result};
use crate::fdr::{run_baseline_test, Method, MultipleTestResult};
use crate::gap::{run_enhanced_test, GapConfig};
use crate::global::{run_global_test, GlobalTestResult};
use crate::netdata::{
    load_stack, sniff_format, Group, LinkIndexMap, NetworkSampleStack, StackFormat,
};
use crate::stats::LinkStatistics;

/// Entrywise transform applied before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    /// `ln(1 + x)`, defined at zero counts.
    Log1p,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::None => "none",
            Transform::Log1p => "log1p",
        }
    }

    pub fn apply(self, stack: &NetworkSampleStack) -> Result<NetworkSampleStack> {
        match self {
            Transform::None => Ok(stack.clone()),
            Transform::Log1p => {
                if let Some(&bad) = stack.as_flat().iter().find(|&&x| x <= -1.0) {
                    return Err(Error::invalid(format!(
                        "log1p needs entries above -1, found {bad}"
                    )));
                }
                stack.map_entries(f64::ln_1p)
            }
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Transform::None),
            "log1p" => Ok(Transform::Log1p),
            other => Err(Error::invalid(format!(
                "unknown transform '{other}' (expected none or log1p)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub alpha: f64,
    pub transform: Transform,
    /// Its `alpha` is replaced by the one above.
    pub gap: GapConfig,
    /// Input format; sniffed from each file when absent.
    pub format: Option<StackFormat>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            transform: Transform::None,
            gap: GapConfig::default(),
            format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataAnalysis {
    pub transform: Transform,
    pub alpha: f64,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub stats: LinkStatistics,
    pub global: GlobalTestResult,
    pub baseline: MultipleTestResult,
    pub enhanced: MultipleTestResult,
}

/// One row of the link-level results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub link: usize,
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub a: f64,
    pub pvalue: f64,
    /// Weighted p-value for the enhanced method; the raw p-value otherwise.
    pub adjusted_pvalue: f64,
    pub rejected: bool,
}

fn load(path: &Path, format: Option<StackFormat>, group: Group) -> Result<NetworkSampleStack> {
    let format = match format {
        Some(f) => f,
        None => sniff_format(path)?,
    };
    load_stack(path, format, group)
}

/// Run all three procedures on two stacks.
pub fn analyze_stacks(
    stack1: &NetworkSampleStack,
    stack2: &NetworkSampleStack,
    settings: &AnalysisSettings,
) -> Result<RealDataAnalysis> {
    if stack1.p() != stack2.p() {
        return Err(Error::DimensionMismatch {
            expected: stack1.p(),
            found: stack2.p(),
            context: "node count of the second stack".into(),
        });
    }
    let s1 = settings.transform.apply(stack1)?;
    let s2 = settings.transform.apply(stack2)?;
    let stats = LinkStatistics::compute(&s1, &s2)?;
    let q = stats.q();
    let gap = GapConfig {
        alpha: settings.alpha,
        ..settings.gap.clone()
    };
    Ok(RealDataAnalysis {
        transform: settings.transform,
        alpha: settings.alpha,
        p: s1.p(),
        n1: s1.n(),
        n2: s2.n(),
        global: run_global_test(&stats.t, settings.alpha, q)?,
        baseline: run_baseline_test(&stats.t, settings.alpha, q)?,
        enhanced: run_enhanced_test(&stats.t, &stats.a, &gap)?,
        stats,
    })
}

/// Load two stacks from disk and analyze them.
pub fn analyze_real_data(
    path1: &Path,
    path2: &Path,
    settings: &AnalysisSettings,
) -> Result<RealDataAnalysis> {
    let stack1 = load(path1, settings.format, Group::First)?;
    let stack2 = load(path2, settings.format, Group::Second)?;
    analyze_stacks(&stack1, &stack2, settings)
}

impl RealDataAnalysis {
    pub fn result(&self, method: Method) -> Option<&MultipleTestResult> {
        match method {
            Method::Global => None,
            Method::Baseline => Some(&self.baseline),
            Method::Enhanced => Some(&self.enhanced),
        }
    }

    /// Link table for a link-wise method.
    pub fn link_rows(&self, method: Method) -> Result<Vec<LinkRow>> {
        let result = self
            .result(method)
            .ok_or_else(|| Error::invalid("the global test has no link table"))?;
        let mut rejected = vec![false; self.stats.q()];
        for &k in &result.rejected {
            rejected[k] = true;
        }
        let adjusted = result.enhanced.as_ref().map(|d| &d.adjusted_pvalues);
        let map = LinkIndexMap::new(self.p)?;
        Ok((0..self.stats.q())
            .map(|k| {
                let (i, j) = map.unflatten(k).expect("link index in range");
                LinkRow {
                    link: k,
                    i,
                    j,
                    t: self.stats.t[k],
                    a: self.stats.a[k],
                    pvalue: self.stats.pvalue[k],
                    adjusted_pvalue: adjusted.map_or(self.stats.pvalue[k], |v| v[k]),
                    rejected: rejected[k],
                }
            })
            .collect())
    }

    fn summary(&self, method: Method) -> Vec<(&'static str, String)> {
        let g = &self.global;
        let mut s = vec![
            ("method", method.to_string()),
            ("transform", self.transform.name().to_string()),
            ("alpha", real(self.alpha)),
            ("p", self.p.to_string()),
            ("q", self.stats.q().to_string()),
            ("n1", self.n1.to_string()),
            ("n2", self.n2.to_string()),
            ("global_statistic", real(g.m_n)),
            ("global_critical_value", real(g.critical_value)),
            ("global_pvalue", real(g.pvalue)),
            ("global_reject", g.reject.to_string()),
            ("global_argmax_link", g.argmax_link.to_string()),
            (
                "baseline_rejections",
                self.baseline.n_rejections().to_string(),
            ),
            ("baseline_threshold", real(self.baseline.threshold)),
            (
                "enhanced_rejections",
                self.enhanced.n_rejections().to_string(),
            ),
        ];
        if let Some(d) = &self.enhanced.enhanced {
            s.push(("enhanced_groups", d.k_effective.to_string()));
            s.push(("enhanced_group_sizes", format!("{:?}", d.group_sizes)));
        }
        s
    }

    /// Summary plus, for link-wise methods, the link table.
    pub fn render(&self, method: Method, format: ReportFormat) -> Result<String> {
        let summary = self.summary(method);
        let rows = match method {
            Method::Global => Vec::new(),
            m => self.link_rows(m)?,
        };
        let mut out = String::new();
        match format {
            ReportFormat::Tsv => {
                for (k, v) in &summary {
                    out.push_str(&format!("# {k}\t{v}\n"));
                }
                if method != Method::Global {
                    out.push_str("link\ti\tj\tt\ta\tpvalue\tadjusted_pvalue\trejected\n");
                    for r in &rows {
                        out.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                            r.link,
                            r.i,
                            r.j,
                            real(r.t),
                            real(r.a),
                            real(r.pvalue),
                            real(r.adjusted_pvalue),
                            u8::from(r.rejected)
                        ));
                    }
                }
            }
            ReportFormat::Jsonl => {
                let mut head = serde_json::Map::new();
                head.insert("kind".into(), "summary".into());
                for (k, v) in &summary {
                    head.insert((*k).into(), v.clone().into());
                }
                out.push_str(&serde_json::Value::Object(head).to_string());
                out.push('\n');
                for r in &rows {
                    let line = serde_json::to_string(r)
                        .map_err(|e| Error::Invariant(format!("link row encoding failed: {e}")))?;
                    out.push_str(&line);
                    out.push('\n');
                }
            }
            ReportFormat::Table => {
                let width = summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &summary {
                    out.push_str(&format!("{k:<width$}  {v}\n"));
                }
                let hits: Vec<&LinkRow> = rows.iter().filter(|r| r.rejected).collect();
                if !hits.is_empty() {
                    out.push_str(&format!(
                        "\n{:>4} {:>4} {:>10} {:>10} {:>12} {:>12}\n",
                        "i", "j", "T", "A", "p", "adjusted p"
                    ));
                    for r in hits {
                        out.push_str(&format!(
                            "{:>4} {:>4} {:>10.4} {:>10.4} {:>12.4e} {:>12.4e}\n",
                            r.i, r.j, r.t, r.a, r.pvalue, r.adjusted_pvalue
                        ));
                    }
                }
            }
        }
        Ok(out)
    }
}
