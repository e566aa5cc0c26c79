use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eig::{cluster_means, raw_eigenvalues};
use super::{check_square, cnorm2, to_complex, CMatrix, Matrix, Tolerances};
use crate::error::{Error, Result};

/// Number of Jordan blocks of one size at one eigenvalue modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureEntry {
    pub magnitude: f64,
    pub block_size: usize,
    pub count: usize,
}

/// Multiset of (modulus, block size) pairs of a matrix's complex Jordan form.
///
/// Entries are ordered by ascending magnitude, then descending block size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanSignature {
    pub entries: Vec<SignatureEntry>,
}

impl JordanSignature {
    pub fn dim(&self) -> usize {
        self.entries.iter().map(|e| e.block_size * e.count).sum()
    }

    /// Distinct magnitudes with the block-size partition found at each.
    pub fn groups(&self) -> Vec<(f64, Vec<usize>)> {
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for e in &self.entries {
            let blocks = std::iter::repeat_n(e.block_size, e.count);
            match out.last_mut() {
                Some((m, parts)) if *m == e.magnitude => parts.extend(blocks),
                _ => out.push((e.magnitude, blocks.collect())),
            }
        }
        out
    }

    /// Same block structure with magnitudes matched as `ln r_self = exponent * ln r_other`
    /// to within `log_tol`.
    pub fn matches_rescaled(&self, other: &Self, exponent: f64, log_tol: f64) -> bool {
        let (a, b) = (self.groups(), other.groups());
        a.len() == b.len()
            && a.iter().zip(&b).all(|((ra, pa), (rb, pb))| {
                pa == pb && (ra.ln() - exponent * rb.ln()).abs() <= log_tol
            })
    }

    fn from_counts(mut raw: Vec<(f64, usize, usize)>, mag_tol: f64) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Chain moduli that agree to `mag_tol` relatively into one magnitude.
        let mut groups: Vec<Vec<(f64, usize, usize)>> = Vec::new();
        for item in raw {
            match groups.last_mut() {
                Some(g) if (item.0 - g.last().unwrap().0).abs() <= mag_tol * item.0 => g.push(item),
                _ => groups.push(vec![item]),
            }
        }
        let mut entries = Vec::new();
        for g in groups {
            let weight: usize = g.iter().map(|(_, s, c)| s * c).sum();
            let magnitude =
                g.iter().map(|(m, s, c)| m * (s * c) as f64).sum::<f64>() / weight as f64;
            let mut sizes: Vec<(usize, usize)> = Vec::new();
            for (_, s, c) in g {
                match sizes.iter_mut().find(|(sz, _)| *sz == s) {
                    Some((_, cnt)) => *cnt += c,
                    None => sizes.push((s, c)),
                }
            }
            sizes.sort_by(|a, b| b.0.cmp(&a.0));
            entries.extend(sizes.into_iter().map(|(block_size, count)| SignatureEntry {
                magnitude,
                block_size,
                count,
            }));
        }
        JordanSignature { entries }
    }
}

/// Numerical nullity from singular values, failing when one sits near the threshold.
fn nullity(singular: &[f64], scale: f64, tol: f64) -> Result<Vec<usize>> {
    if scale == 0.0 {
        return Ok((0..singular.len()).collect());
    }
    let mut null = Vec::new();
    for (i, &s) in singular.iter().enumerate() {
        let r = s / scale;
        if r > tol / 10.0 && r <= 10.0 * tol {
            return Err(Error::AmbiguousRank {
                detail: format!(
                    "normalized singular value {r:e} within a decade of threshold {tol:e}"
                ),
            });
        }
        if r <= tol {
            null.push(i);
        }
    }
    Ok(null)
}

/// Orthonormal bases of `ker (M - lambda I)^m` for `m = 1..=max_m`.
///
/// Uses `ker N^m = { x : N x in ker N^(m-1) }` so that only `N` itself (never a
/// power) is factored; ranks are judged against `||N||`, and `N` itself counts
/// as zero when `||N|| <= tol ||M||`.
fn kernel_chain(m: &Matrix, lambda: Complex64, max_m: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let n = m.nrows();
    let shifted = to_complex(m) - CMatrix::identity(n, n) * lambda;
    let scale = cnorm2(&shifted);
    // a shift that is rounding noise relative to M means M = lambda I
    let ratio = scale / cnorm2(&to_complex(m)).max(f64::MIN_POSITIVE);
    if ratio > tol / 10.0 && ratio <= 10.0 * tol {
        return Err(Error::AmbiguousRank {
            detail: format!("||M - lambda I|| / ||M|| = {ratio:e} within a decade of threshold {tol:e}"),
        });
    }
    if ratio <= tol {
        let full = CMatrix::identity(n, n);
        return Ok(vec![full; max_m.min(1)]);
    }
    let mut basis = CMatrix::zeros(n, 0);
    let mut chain = Vec::with_capacity(max_m);
    for _ in 0..max_m {
        let projector = CMatrix::identity(n, n) - &basis * basis.adjoint();
        let c = projector * &shifted;
        let svd = c.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
        let null = nullity(&singular, scale, tol)?;
        let mut next = CMatrix::zeros(n, null.len());
        for (col, &i) in null.iter().enumerate() {
            for r in 0..n {
                next[(r, col)] = v_t[(i, r)].conj();
            }
        }
        let stalled = next.ncols() == basis.ncols();
        basis = next;
        chain.push(basis.clone());
        if stalled || basis.ncols() == n {
            break;
        }
    }
    Ok(chain)
}

/// `n - rank((M - lambda I)^m)` with rank threshold `tol * ||M - lambda I||`.
pub fn generalized_kernel_dim(
    m: &Matrix,
    lambda: Complex64,
    power: usize,
    tol: f64,
) -> Result<usize> {
    let n = check_square(m)?;
    if power > n {
        return Err(Error::InvalidParameter(format!(
            "power {power} exceeds dimension {n}"
        )));
    }
    if power == 0 {
        return Ok(0);
    }
    let chain = kernel_chain(m, lambda, power, tol)?;
    Ok(chain.last().map_or(0, |b| b.ncols()))
}

/// Orthonormal basis of the generalized eigenspace at `lambda` together with
/// `dim ker (M - lambda I)^m` for `m = 1, 2, ...` until it stabilizes.
///
/// Fails with `AmbiguousRank` if the stabilized dimension differs from `multiplicity`.
pub fn generalized_eigenspace(
    m: &Matrix,
    lambda: Complex64,
    multiplicity: usize,
    tol: f64,
) -> Result<(CMatrix, Vec<usize>)> {
    let chain = kernel_chain(m, lambda, multiplicity, tol)?;
    let mut dims: Vec<usize> = chain.iter().map(|b| b.ncols()).collect();
    while dims.len() > 1 && dims[dims.len() - 1] == dims[dims.len() - 2] {
        dims.pop();
    }
    let basis = chain
        .into_iter()
        .last()
        .unwrap_or_else(|| CMatrix::zeros(m.nrows(), 0));
    if basis.ncols() != multiplicity {
        return Err(Error::AmbiguousRank {
            detail: format!(
                "generalized eigenspace at {lambda} has dimension {} but multiplicity {multiplicity}",
                basis.ncols()
            ),
        });
    }
    Ok((basis, dims))
}

/// Block counts per size from kernel dimensions `d_1, d_2, ...`.
pub(crate) fn block_counts(dims: &[usize]) -> Result<Vec<(usize, usize)>> {
    // at_least[m-1] = number of blocks of size >= m
    let at_least: Vec<usize> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| d - if i == 0 { 0 } else { dims[i - 1] })
        .collect();
    if at_least.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::AmbiguousRank {
            detail: format!("kernel dimensions {dims:?} are not a Jordan chain"),
        });
    }
    let mut out = Vec::new();
    for (i, &g) in at_least.iter().enumerate() {
        let next = at_least.get(i + 1).copied().unwrap_or(0);
        if g > next {
            out.push((i + 1, g - next));
        }
    }
    Ok(out)
}

/// Jordan signature: for each eigenvalue modulus, the sizes of the Jordan blocks.
pub fn jordan_signature(m: &Matrix, tols: &Tolerances) -> Result<JordanSignature> {
    check_square(m)?;
    let raw = raw_eigenvalues(m)?;
    let clusters = cluster_means(&raw, tols.jordan_cluster * m.norm());
    let mut counts = Vec::new();
    for c in clusters {
        let (_, dims) = generalized_eigenspace(m, c.value, c.multiplicity, tols.rank)?;
        for (size, count) in block_counts(&dims)? {
            counts.push((c.value.norm(), size, count));
        }
    }
    Ok(JordanSignature::from_counts(counts, tols.jordan_cluster))
}
