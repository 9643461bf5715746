//! TOML run configuration. Keys mirror the command-line flags; scenarios
//! for `simulate` are listed as `[[scenario]]` tables.
//!
//! ```toml
//! alpha = 0.05
//! reps = 100
//! seed = 20240601
//! methods = ["baseline", "enhanced"]
//!
//! [[scenario]]
//! family = "bernoulli"
//! n = 100
//! k_fraction = 0.2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ReportFormat, Transform};
use crate::error::{Error, Result};
use crate::fdr::Method;
use crate::netdata::link_count;
use crate::simgen::{k_from_fraction, Family, FamilyParams, ScenarioSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub k_groups: Option<usize>,
    pub storey_lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub transform: Option<Transform>,
    pub workers: Option<usize>,
    pub format: Option<ReportFormat>,
    pub out: Option<PathBuf>,
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub family: Family,
    /// Nodes; 68 when absent.
    pub p: Option<usize>,
    /// Both group sizes at once.
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub k_q: Option<usize>,
    /// Sparsity as a fraction of `q`, rounded to the nearest link.
    pub k_fraction: Option<f64>,
    /// Overrides the run-level seed for this scenario.
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: FamilyParams,
}

pub const DEFAULT_NODES: usize = 68;

impl ScenarioEntry {
    pub fn resolve(&self, master_seed: Option<u64>) -> Result<ScenarioSpec> {
        let p = self.p.unwrap_or(DEFAULT_NODES);
        let n1 = self
            .n1
            .or(self.n)
            .ok_or_else(|| Error::invalid("scenario needs n or n1"))?;
        let n2 = self
            .n2
            .or(self.n)
            .ok_or_else(|| Error::invalid("scenario needs n or n2"))?;
        let k_q = match (self.k_q, self.k_fraction) {
            (Some(k), None) => k,
            (None, Some(f)) if (0.0..=1.0).contains(&f) => k_from_fraction(link_count(p), f),
            (None, Some(f)) => {
                return Err(Error::invalid(format!(
                    "k_fraction must lie in [0, 1], got {f}"
                )))
            }
            (Some(_), Some(_)) => return Err(Error::invalid("give k_q or k_fraction, not both")),
            (None, None) => return Err(Error::invalid("scenario needs k_q or k_fraction")),
        };
        let seed = self
            .seed
            .or(master_seed)
            .ok_or_else(|| Error::invalid("a seed is required for simulation"))?;
        let spec = ScenarioSpec {
            family: self.family,
            p,
            n1,
            n2,
            k_q,
            params: self.params.clone(),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| Error::parse(None, format!("config: {}", e.message())))
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = parse_config(
            r#"
alpha = 0.1
reps = 20
seed = 7
k_groups = 2
storey_lambda = 0.4
epsilon = 1e-4
transform = "log1p"
workers = 2
format = "jsonl"
out = "report.jsonl"
methods = ["global", "enhanced"]

[[scenario]]
family = "bernoulli"
n = 100
k_fraction = 0.2

[[scenario]]
family = "transformed-wishart"
p = 20
n1 = 30
n2 = 40
k_q = 40
seed = 99
params = { wishart_dof = 50, zero_count = "clamp-one" }
"#,
        )
        .unwrap();
        assert_eq!(cfg.alpha, Some(0.1));
        assert_eq!(cfg.transform, Some(Transform::Log1p));
        assert_eq!(cfg.methods, Some(vec![Method::Global, Method::Enhanced]));
        let a = cfg.scenario[0].resolve(cfg.seed).unwrap();
        assert_eq!((a.p, a.n1, a.n2, a.k_q, a.seed), (68, 100, 100, 456, 7));
        let b = cfg.scenario[1].resolve(cfg.seed).unwrap();
        assert_eq!((b.p, b.n1, b.n2, b.k_q, b.seed), (20, 30, 40, 40, 99));
        assert_eq!(b.params.wishart_dof, 50);
        assert_eq!(b.params.zero_count, crate::simgen::ZeroCountRule::ClampOne);
    }

    #[test]
    fn config_errors() {
        assert!(parse_config("alpah = 0.1").is_err());
        assert!(parse_config("alpha = \"x\"").is_err());
        assert!(parse_config("[[scenario]]\nfamily = \"gaussian\"\nn = 3\nk_q = 1").is_err());
        let cfg = parse_config("[[scenario]]\nfamily = \"bernoulli\"\nn = 30\nk_q = 10").unwrap();
        assert!(cfg.scenario[0].resolve(None).is_err());
        let cfg = parse_config("[[scenario]]\nfamily = \"bernoulli\"\nn = 30").unwrap();
        assert!(cfg.scenario[0].resolve(Some(1)).is_err());
    }
}
