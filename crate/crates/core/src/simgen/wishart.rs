use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netdata::LinkIndexMap;

/// Above this, `exp` is so coarse that rounding to an integer is the identity.
pub const OVERFLOW_GUARD: f64 = 30.0;

/// What `log(round(exp(x)))` does when the rounded count is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroCountRule {
    /// Count at least one, so the entry becomes `0`.
    ClampOne,
    /// Leave the entry untransformed.
    #[default]
    Keep,
}

/// Entrywise `log(round(exp(x)))`.
pub fn transform_count(x: f64, rule: ZeroCountRule) -> f64 {
    if x > OVERFLOW_GUARD {
        return x;
    }
    let count = x.exp().round();
    if count >= 1.0 {
        return count.ln();
    }
    match rule {
        ZeroCountRule::ClampOne => 0.0,
        ZeroCountRule::Keep => x,
    }
}

/// Mirror the upper triangle onto the lower one so the result is exactly symmetric.
fn mirror_upper(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// One draw from `Wishart(scale, dof)` by the Bartlett decomposition; the
/// mean is `dof * scale`.
pub fn wishart_sample<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = scale.nrows();
    if scale.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: scale.ncols(),
            context: "Wishart scale columns".into(),
        });
    }
    if dof < p {
        return Err(Error::invalid(format!(
            "Wishart degrees of freedom {dof} below dimension {p}"
        )));
    }
    let chol = Cholesky::new(scale.clone())
        .ok_or_else(|| Error::invalid("Wishart scale is not positive definite"))?;
    let l = chol.l();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new((dof - i) as f64)
            .map_err(|e| Error::Invariant(format!("chi-square with {} dof: {e}", dof - i)))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let la = l * a;
    let mut s = &la * la.transpose();
    mirror_upper(&mut s);
    Ok(s)
}

/// `Sigma' + (|lambda_min(Sigma')| + ridge) I`, where `Sigma'` has
/// `Uniform(low, high)` entries on the support links (mirrored) and zeros
/// elsewhere, including the diagonal.
pub fn sigma_from_support<R: Rng + ?Sized>(
    map: &LinkIndexMap,
    support: &[usize],
    low: f64,
    high: f64,
    ridge: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = map.p();
    let uniform = Uniform::new(low, high)
        .map_err(|e| Error::invalid(format!("Uniform({low}, {high}): {e}")))?;
    let mut m = DMatrix::<f64>::zeros(p, p);
    for &k in support {
        let (i, j) = map
            .unflatten(k)
            .ok_or_else(|| Error::invalid(format!("support link {k} out of range")))?;
        let v = uniform.sample(rng);
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let lambda_min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    let shift = lambda_min.abs() + ridge;
    for i in 0..p {
        m[(i, i)] += shift;
    }
    Ok(m)
}

/// `t^{-1} sum_j (x_j - xbar)(x_j - xbar)^T` over the `t` columns of `x`.
pub fn sample_correlation_network(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = x.ncols();
    if t < 2 {
        return Err(Error::invalid(format!("need at least 2 columns, got {t}")));
    }
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let mut s = &centered * centered.transpose() / t as f64;
    mirror_upper(&mut s);
    Ok(s)
}
