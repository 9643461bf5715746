//! Report serialization. `tsv` and `jsonl` are lossless and parse back;
//! `table` is for reading only.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ReplicationRecord, ReplicationReport};
use crate::error::{Error, Result};
use crate::fdr::Method;
use crate::gap::GapConfig;
use crate::simgen::{FamilyParams, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Tsv,
    Jsonl,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "jsonl" | "json-lines" => Ok(ReportFormat::Jsonl),
            "table" | "human-table" => Ok(ReportFormat::Table),
            other => Err(Error::invalid(format!("unknown report format '{other}'"))),
        }
    }
}

/// 17 significant digits.
pub(crate) fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value)
        .map_err(|e| Error::Invariant(format!("report encoding failed: {e}")))
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    scenario: ScenarioSpec,
    method: Method,
    alpha: f64,
    gap: Option<GapConfig>,
    n_replications: usize,
    pure_null_replications: usize,
    empirical_fdr: f64,
    empirical_power: f64,
    fdr_se: f64,
    power_se: f64,
}

impl Header {
    fn of(r: &ReplicationReport) -> Self {
        Self {
            scenario: r.scenario.clone(),
            method: r.method,
            alpha: r.alpha,
            gap: r.gap.clone(),
            n_replications: r.n_replications,
            pure_null_replications: r.pure_null_replications,
            empirical_fdr: r.empirical_fdr,
            empirical_power: r.empirical_power,
            fdr_se: r.fdr_se,
            power_se: r.power_se,
        }
    }

    /// Rebuild the report and check the stored aggregates against it.
    fn into_report(
        self,
        records: Vec<ReplicationRecord>,
        line: usize,
    ) -> Result<ReplicationReport> {
        if records.len() != self.n_replications {
            return Err(Error::parse(
                Some(line),
                format!(
                    "report declares {} replications but has {}",
                    self.n_replications,
                    records.len()
                ),
            ));
        }
        let report = ReplicationReport::from_records(
            self.scenario,
            self.method,
            self.alpha,
            self.gap,
            self.pure_null_replications,
            records,
        )
        .map_err(|e| Error::parse(Some(line), e.to_string()))?;
        let stored = [
            self.empirical_fdr,
            self.empirical_power,
            self.fdr_se,
            self.power_se,
        ];
        let recomputed = [
            report.empirical_fdr,
            report.empirical_power,
            report.fdr_se,
            report.power_se,
        ];
        if stored
            .iter()
            .zip(&recomputed)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::parse(
                Some(line),
                "stored aggregates differ from the per-replication records",
            ));
        }
        Ok(report)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum JsonLine {
    Report(Box<Header>),
    Replication(ReplicationRecord),
}

fn emit_jsonl(reports: &[ReplicationReport], out: &mut String) -> Result<()> {
    for r in reports {
        out.push_str(&to_json(&JsonLine::Report(Box::new(Header::of(r))))?);
        out.push('\n');
        for rec in &r.per_replication {
            out.push_str(&to_json(&JsonLine::Replication(rec.clone()))?);
            out.push('\n');
        }
    }
    Ok(())
}

fn parse_jsonl(text: &str) -> Result<Vec<ReplicationReport>> {
    let mut reports = Vec::new();
    let mut current: Option<(Header, Vec<ReplicationRecord>, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parsed: JsonLine =
            serde_json::from_str(raw).map_err(|e| Error::parse(Some(line), e.to_string()))?;
        match parsed {
            JsonLine::Report(h) => {
                if let Some((h, recs, at)) = current.take() {
                    reports.push(h.into_report(recs, at)?);
                }
                current = Some((*h, Vec::new(), line));
            }
            JsonLine::Replication(rec) => match current.as_mut() {
                Some((_, recs, _)) => recs.push(rec),
                None => {
                    return Err(Error::parse(
                        Some(line),
                        "replication before any report header",
                    ))
                }
            },
        }
    }
    if let Some((h, recs, at)) = current {
        reports.push(h.into_report(recs, at)?);
    }
    Ok(reports)
}

const TSV_COLUMNS: &str = "index\tfdp\tpower\tn_rejections\tthreshold";

fn emit_tsv(reports: &[ReplicationReport], out: &mut String) -> Result<()> {
    for r in reports {
        let s = &r.scenario;
        let meta: Vec<(&str, String)> = vec![
            ("family", s.family.to_string()),
            ("p", s.p.to_string()),
            ("n1", s.n1.to_string()),
            ("n2", s.n2.to_string()),
            ("k_q", s.k_q.to_string()),
            ("seed", s.seed.to_string()),
            ("params", to_json(&s.params)?),
            ("method", r.method.to_string()),
            ("alpha", real(r.alpha)),
            (
                "gap",
                match &r.gap {
                    Some(g) => to_json(g)?,
                    None => "none".into(),
                },
            ),
            ("n_replications", r.n_replications.to_string()),
            (
                "pure_null_replications",
                r.pure_null_replications.to_string(),
            ),
            ("empirical_fdr", real(r.empirical_fdr)),
            ("empirical_power", real(r.empirical_power)),
            ("fdr_se", real(r.fdr_se)),
            ("power_se", real(r.power_se)),
        ];
        out.push_str("# report\n");
        for (k, v) in meta {
            out.push_str(&format!("# {k}\t{v}\n"));
        }
        out.push_str(TSV_COLUMNS);
        out.push('\n');
        for rec in &r.per_replication {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                rec.index,
                real(rec.fdp),
                real(rec.power),
                rec.n_rejections,
                real(rec.threshold)
            ));
        }
    }
    Ok(())
}

struct TsvBlock {
    start: usize,
    meta: Vec<(String, String)>,
    rows: Vec<ReplicationRecord>,
    seen_columns: bool,
}

impl TsvBlock {
    fn take(&mut self, key: &str) -> Result<String> {
        let pos = self
            .meta
            .iter()
            .position(|(k, _)| k == key)
            .ok_or_else(|| Error::parse(Some(self.start), format!("missing '{key}'")))?;
        Ok(self.meta.remove(pos).1)
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.take(key)?;
        raw.parse()
            .map_err(|e| Error::parse(Some(self.start), format!("bad '{key}' value '{raw}': {e}")))
    }

    fn finish(mut self) -> Result<ReplicationReport> {
        if !self.seen_columns {
            return Err(Error::parse(
                Some(self.start),
                "report has no column header",
            ));
        }
        let start = self.start;
        let bad_json = |key: &str, e: serde_json::Error| {
            Error::parse(Some(start), format!("bad '{key}': {e}"))
        };
        let params: FamilyParams =
            serde_json::from_str(&self.take("params")?).map_err(|e| bad_json("params", e))?;
        let gap_raw = self.take("gap")?;
        let gap: Option<GapConfig> = if gap_raw == "none" {
            None
        } else {
            Some(serde_json::from_str(&gap_raw).map_err(|e| bad_json("gap", e))?)
        };
        let family_raw = self.take("family")?;
        let scenario = ScenarioSpec {
            family: family_raw.parse()?,
            p: self.field("p")?,
            n1: self.field("n1")?,
            n2: self.field("n2")?,
            k_q: self.field("k_q")?,
            params,
            seed: self.field("seed")?,
        };
        let header = Header {
            scenario,
            method: self.take("method")?.parse()?,
            alpha: self.field("alpha")?,
            gap,
            n_replications: self.field("n_replications")?,
            pure_null_replications: self.field("pure_null_replications")?,
            empirical_fdr: self.field("empirical_fdr")?,
            empirical_power: self.field("empirical_power")?,
            fdr_se: self.field("fdr_se")?,
            power_se: self.field("power_se")?,
        };
        if let Some((k, _)) = self.meta.first() {
            return Err(Error::parse(Some(start), format!("unknown key '{k}'")));
        }
        header.into_report(self.rows, start)
    }
}

fn parse_row(raw: &str, line: usize) -> Result<ReplicationRecord> {
    let cells: Vec<&str> = raw.split('\t').collect();
    if cells.len() != 5 {
        return Err(Error::parse(
            Some(line),
            format!("expected 5 columns, got {}", cells.len()),
        ));
    }
    let bad = |what: &str| Error::parse(Some(line), format!("bad {what}"));
    Ok(ReplicationRecord {
        index: cells[0].parse().map_err(|_| bad("index"))?,
        fdp: cells[1].parse().map_err(|_| bad("fdp"))?,
        power: cells[2].parse().map_err(|_| bad("power"))?,
        n_rejections: cells[3].parse().map_err(|_| bad("n_rejections"))?,
        threshold: cells[4].parse().map_err(|_| bad("threshold"))?,
    })
}

fn parse_tsv(text: &str) -> Result<Vec<ReplicationReport>> {
    let mut reports = Vec::new();
    let mut block: Option<TsvBlock> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        if raw == "# report" {
            if let Some(b) = block.take() {
                reports.push(b.finish()?);
            }
            block = Some(TsvBlock {
                start: line,
                meta: Vec::new(),
                rows: Vec::new(),
                seen_columns: false,
            });
            continue;
        }
        let b = block
            .as_mut()
            .ok_or_else(|| Error::parse(Some(line), "content before '# report'"))?;
        if let Some(rest) = raw.strip_prefix("# ") {
            if b.seen_columns {
                return Err(Error::parse(Some(line), "metadata after the column header"));
            }
            let (k, v) = rest
                .split_once('\t')
                .ok_or_else(|| Error::parse(Some(line), "metadata line without a tab"))?;
            if b.meta.iter().any(|(key, _)| key == k) {
                return Err(Error::parse(Some(line), format!("duplicate key '{k}'")));
            }
            b.meta.push((k.to_string(), v.to_string()));
        } else if raw == TSV_COLUMNS {
            if b.seen_columns {
                return Err(Error::parse(Some(line), "duplicate column header"));
            }
            b.seen_columns = true;
        } else if b.seen_columns {
            b.rows.push(parse_row(raw, line)?);
        } else {
            return Err(Error::parse(Some(line), "row before the column header"));
        }
    }
    if let Some(b) = block {
        reports.push(b.finish()?);
    }
    Ok(reports)
}

fn emit_table(reports: &[ReplicationReport], out: &mut String) {
    out.push_str(&format!(
        "{:<20} {:>4} {:>4} {:>6} {:>6} {:<9} {:>7} {:>8}\n",
        "family", "p", "n", "k_q", "reps", "method", "FDR(%)", "power(%)"
    ));
    for r in reports {
        let s = &r.scenario;
        let n = if s.n1 == s.n2 {
            s.n1.to_string()
        } else {
            format!("{}/{}", s.n1, s.n2)
        };
        out.push_str(&format!(
            "{:<20} {:>4} {:>4} {:>6} {:>6} {:<9} {:>7.1} {:>8.1}\n",
            s.family.name(),
            s.p,
            n,
            s.k_q,
            r.n_replications,
            r.method.to_string(),
            r.empirical_fdr,
            r.empirical_power
        ));
    }
    if reports.iter().any(|r| r.pure_null_replications > 0) {
        out.push_str("# power is reported as 0 for replications without true alternatives\n");
    }
}

/// Render reports; every report must carry at least one replication.
pub fn emit_reports(reports: &[ReplicationReport], format: ReportFormat) -> Result<String> {
    if let Some(r) = reports.iter().find(|r| r.per_replication.is_empty()) {
        return Err(Error::invalid(format!(
            "report for {} / {} has no replications",
            r.scenario.family, r.method
        )));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => emit_tsv(reports, &mut out)?,
        ReportFormat::Jsonl => emit_jsonl(reports, &mut out)?,
        ReportFormat::Table => emit_table(reports, &mut out),
    }
    Ok(out)
}

/// Parse a machine-format report file.
pub fn parse_reports(text: &str, format: ReportFormat) -> Result<Vec<ReplicationReport>> {
    match format {
        ReportFormat::Tsv => parse_tsv(text),
        ReportFormat::Jsonl => parse_jsonl(text),
        ReportFormat::Table => Err(Error::invalid("the table format cannot be parsed back")),
    }
}

/// Write to `out`, or stdout when absent.
pub fn write_reports(
    reports: &[ReplicationReport],
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let text = emit_reports(reports, format)?;
    write_text(&text, out)
}

pub fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}
