//! Stacks of symmetric network matrices and the canonical link ordering.
//!
//! A link is an off-diagonal pair `(i, j)` with `i < j`. Links are numbered
//! row-major over the upper triangle, so for `p = 4` the order is
//! `(0,1) (0,2) (0,3) (1,2) (1,3) (2,3)`. Every other module in the crate
//! indexes links this way. Diagonal entries are never hypotheses and are not
//! stored.

mod io;

pub use io::{
    decode_binary, encode_binary, load_stack, parse_csv_matrix, parse_manifest, save_stack,
    sniff_format, write_binary, write_csv_stack, StackFormat, BINARY_MAGIC, BINARY_VERSION,
};

use crate::error::{Error, Result};

/// Absolute tolerance for accepting a nearly symmetric input matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Which of the two populations a stack belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Group {
    First,
    Second,
}

impl Group {
    pub fn id(self) -> u8 {
        match self {
            Group::First => 1,
            Group::Second => 2,
        }
    }
}

/// Bijection between upper-triangular pairs and flat link indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkIndexMap {
    p: usize,
    pairs: Vec<(u32, u32)>,
}

impl LinkIndexMap {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("node count must be >= 2, got {p}")));
        }
        if p > u32::MAX as usize {
            return Err(Error::invalid(format!("node count {p} is too large")));
        }
        let mut pairs = Vec::with_capacity(link_count(p));
        for i in 0..p {
            for j in (i + 1)..p {
                pairs.push((i as u32, j as u32));
            }
        }
        Ok(Self { p, pairs })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of links, `p(p-1)/2`.
    pub fn q(&self) -> usize {
        self.pairs.len()
    }

    /// Flat index of the pair `(i, j)`; the pair may be given in either order.
    pub fn flatten(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        if i == j || j >= self.p {
            return None;
        }
        Some(i * (2 * self.p - i - 1) / 2 + (j - i - 1))
    }

    pub fn unflatten(&self, k: usize) -> Option<(usize, usize)> {
        self.pairs.get(k).map(|&(i, j)| (i as usize, j as usize))
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|&(i, j)| (i as usize, j as usize))
    }
}

pub fn link_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    p: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_row_major(p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                found: data.len(),
                context: "square matrix entries".into(),
            });
        }
        Ok(Self { p, data })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            p,
            data: vec![0.0; p * p],
        }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.p + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Off-diagonal upper-triangular entries of `matrix` in canonical link order.
pub fn flatten_upper(matrix: &SquareMatrix, map: &LinkIndexMap) -> Result<Vec<f64>> {
    if matrix.p() != map.p() {
        return Err(Error::DimensionMismatch {
            expected: map.p(),
            found: matrix.p(),
            context: "matrix dimension vs link map".into(),
        });
    }
    Ok(map.pairs().map(|(i, j)| matrix.get(i, j)).collect())
}

/// Inverse of [`flatten_upper`]: a symmetric matrix with zero diagonal.
pub fn unflatten_upper(links: &[f64], map: &LinkIndexMap) -> Result<SquareMatrix> {
    if links.len() != map.q() {
        return Err(Error::DimensionMismatch {
            expected: map.q(),
            found: links.len(),
            context: "link vector length".into(),
        });
    }
    let mut m = SquareMatrix::zeros(map.p());
    for ((i, j), &v) in map.pairs().zip(links) {
        m.set(i, j, v);
        m.set(j, i, v);
    }
    Ok(m)
}

/// One group's `n` symmetric `p x p` network samples.
///
/// Only the off-diagonal upper triangle is kept, sample-major: sample `l`
/// occupies `links[l*q .. (l+1)*q]`. Symmetry therefore holds by construction
/// once a stack exists.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSampleStack {
    group: Group,
    map: LinkIndexMap,
    n: usize,
    links: Vec<f64>,
}

impl NetworkSampleStack {
    /// Build from flattened samples (each of length `q`, canonical order).
    pub fn from_links(group: Group, p: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        let map = LinkIndexMap::new(p)?;
        let q = map.q();
        let mut links = Vec::with_capacity(samples.len() * q);
        for (l, s) in samples.iter().enumerate() {
            if s.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: s.len(),
                    context: format!("links in sample {l}"),
                });
            }
            links.extend_from_slice(s);
        }
        Self::from_flat(group, map, samples.len(), links)
    }

    /// Build from a sample-major buffer of `n * q` link values.
    pub fn from_flat(group: Group, map: LinkIndexMap, n: usize, links: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "a stack needs at least 2 samples, got {n}"
            )));
        }
        if links.len() != n * map.q() {
            return Err(Error::DimensionMismatch {
                expected: n * map.q(),
                found: links.len(),
                context: "flat link buffer".into(),
            });
        }
        let q = map.q();
        if let Some(pos) = links.iter().position(|v| !v.is_finite()) {
            let (row, col) = map.unflatten(pos % q).unwrap_or((0, 0));
            return Err(Error::NonFinite {
                sample: pos / q,
                row,
                col,
            });
        }
        Ok(Self {
            group,
            map,
            n,
            links,
        })
    }

    /// Validate full matrices: equal dimensions, finite entries, symmetry
    /// within [`SYMMETRY_TOLERANCE`]. Accepted pairs are replaced by their
    /// average; the diagonal is discarded.
    pub fn from_matrices(group: Group, matrices: &[SquareMatrix]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::invalid("a stack needs at least 2 samples, got 0"))?;
        let p = first.p();
        let map = LinkIndexMap::new(p)?;
        let mut links = Vec::with_capacity(matrices.len() * map.q());
        for (l, m) in matrices.iter().enumerate() {
            if m.p() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: m.p(),
                    context: format!("dimension of sample {l}"),
                });
            }
            for i in 0..p {
                for j in 0..p {
                    if !m.get(i, j).is_finite() {
                        return Err(Error::NonFinite {
                            sample: l,
                            row: i,
                            col: j,
                        });
                    }
                }
            }
            for (i, j) in map.pairs() {
                let a = m.get(i, j);
                let b = m.get(j, i);
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Asymmetric {
                        sample: l,
                        row: i,
                        col: j,
                        a,
                        b,
                        tol: SYMMETRY_TOLERANCE,
                    });
                }
                links.push((a + b) / 2.0);
            }
        }
        Self::from_flat(group, map, matrices.len(), links)
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn p(&self) -> usize {
        self.map.p()
    }

    pub fn q(&self) -> usize {
        self.map.q()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &LinkIndexMap {
        &self.map
    }

    /// Flattened links of sample `l`.
    pub fn sample(&self, l: usize) -> &[f64] {
        let q = self.q();
        &self.links[l * q..(l + 1) * q]
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.links.chunks_exact(self.q())
    }

    /// Sample `l` as a full symmetric matrix with zero diagonal.
    pub fn matrix(&self, l: usize) -> SquareMatrix {
        unflatten_upper(self.sample(l), &self.map).expect("sample length matches map")
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.links
    }

    /// Apply an entrywise transform, rejecting non-finite results.
    pub fn map_entries(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let links = self.links.iter().map(|&v| f(v)).collect();
        Self::from_flat(self.group, self.map.clone(), self.n, links)
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = group;
        self
    }
}
