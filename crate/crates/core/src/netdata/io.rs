//! On-disk stack formats.
//!
//! `csv-stack`: a manifest listing one sample file per line (relative paths
//! resolve against the manifest's directory); each sample is `p` rows of `p`
//! comma-separated decimals.
//!
//! `binary-stack`: `"NTST"`, version byte `1`, `p: u32 LE`, `n: u32 LE`, then
//! `n` records of `q` little-endian `f64` links in canonical order.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Group, LinkIndexMap, NetworkSampleStack, SquareMatrix};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"NTST";
pub const BINARY_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StackFormat {
    CsvStack,
    BinaryStack,
}

impl std::str::FromStr for StackFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" | "csv-stack" => Ok(StackFormat::CsvStack),
            "binary" | "bin" | "binary-stack" => Ok(StackFormat::BinaryStack),
            other => Err(Error::invalid(format!("unknown stack format '{other}'"))),
        }
    }
}

/// Parse one dense CSV matrix. The row count fixes `p`.
pub fn parse_csv_matrix(text: &str) -> Result<SquareMatrix> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let p = rows.len();
    if p == 0 {
        return Err(Error::parse(None, "empty matrix file"));
    }
    let mut data = Vec::with_capacity(p * p);
    for (line_no, line) in rows {
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(Some(line_no), format!("invalid number '{}'", field.trim()))
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        if width != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: width,
                context: format!("columns on line {line_no}"),
            });
        }
    }
    SquareMatrix::from_row_major(p, data)
}

/// Sample paths listed in a manifest. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Vec<PathBuf> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect()
}

pub fn encode_binary(stack: &NetworkSampleStack) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + stack.as_flat().len() * 8);
    out.extend_from_slice(BINARY_MAGIC);
    out.push(BINARY_VERSION);
    out.extend_from_slice(&(stack.p() as u32).to_le_bytes());
    out.extend_from_slice(&(stack.n() as u32).to_le_bytes());
    for v in stack.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], group: Group) -> Result<NetworkSampleStack> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "need {HEADER_LEN} header bytes, got {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(Error::MalformedHeader("bad magic bytes".into()));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let p = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    if p < 2 {
        return Err(Error::MalformedHeader(format!("node count {p} < 2")));
    }
    let q = super::link_count(p);
    let body_len = n
        .checked_mul(q)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::MalformedHeader("declared size overflows".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != body_len {
        return Err(Error::MalformedHeader(format!(
            "header declares {body_len} body bytes (p={p}, n={n}), file has {}",
            body.len()
        )));
    }
    let links = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    NetworkSampleStack::from_flat(group, LinkIndexMap::new(p)?, n, links)
}

pub fn load_stack(path: &Path, format: StackFormat, group: Group) -> Result<NetworkSampleStack> {
    match format {
        StackFormat::BinaryStack => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_binary(&bytes, group)
        }
        StackFormat::CsvStack => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let mut matrices = Vec::new();
            for entry in parse_manifest(&text) {
                let sample_path = if entry.is_absolute() {
                    entry
                } else {
                    base.join(entry)
                };
                let body =
                    fs::read_to_string(&sample_path).map_err(|e| Error::io(&sample_path, e))?;
                matrices.push(parse_csv_matrix(&body)?);
            }
            NetworkSampleStack::from_matrices(group, &matrices)
        }
    }
}

pub fn write_binary(stack: &NetworkSampleStack, path: &Path) -> Result<()> {
    fs::write(path, encode_binary(stack)).map_err(|e| Error::io(path, e))
}

/// Write one CSV per sample next to `manifest`, named `<stem>_<l>.csv`.
pub fn write_csv_stack(stack: &NetworkSampleStack, manifest: &Path) -> Result<()> {
    let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
    let stem = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sample");
    let mut listing = String::new();
    for l in 0..stack.n() {
        let name = format!("{stem}_{l:04}.csv");
        let m = stack.matrix(l);
        let mut body = String::new();
        for i in 0..m.p() {
            let row: Vec<String> = (0..m.p()).map(|j| m.get(i, j).to_string()).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        let path = dir.join(&name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        listing.push_str(&name);
        listing.push('\n');
    }
    fs::write(manifest, listing).map_err(|e| Error::io(manifest, e))
}

/// Write in either format.
pub fn save_stack(stack: &NetworkSampleStack, path: &Path, format: StackFormat) -> Result<()> {
    match format {
        StackFormat::BinaryStack => write_binary(stack, path),
        StackFormat::CsvStack => write_csv_stack(stack, path),
    }
}

/// Guess the format from the leading magic bytes.
pub fn sniff_format(path: &Path) -> Result<StackFormat> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 4];
    let got = f.read(&mut head).map_err(|e| Error::io(path, e))?;
    Ok(if got == 4 && &head == BINARY_MAGIC {
        StackFormat::BinaryStack
    } else {
        StackFormat::CsvStack
    })
}
