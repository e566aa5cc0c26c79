//! Equivalence of dilations, plain and up to linear transformations, canonical
//! representatives and partition enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansive::Dilation;
use crate::group::associated_generator;
use crate::linalg::{jordan_signature, matrix_power, norm2, JordanSignature, Matrix, Tolerances};

/// Absolute tolerance on `||P_1 - P_2||` for plain equivalence.
pub const GENERATOR_TOL: f64 = 1e-8;
/// Tolerance on `|ln r_1 - eps ln r_2|` for magnitude matching.
pub const LOG_MAGNITUDE_TOL: f64 = 1e-8;
/// Largest horizon accepted by [`brute_force_equivalent`].
pub const MAX_HORIZON: u32 = 200;
/// Largest `n` accepted by [`partitions`].
pub const MAX_PARTITION_N: usize = 40;

const TREND_SLOPE: f64 = 0.01;
const TREND_R2: f64 = 0.9;

/// `eps = ln|det A_1| / ln|det A_2|`.
pub fn epsilon(a1: &Dilation, a2: &Dilation) -> f64 {
    a1.b().ln() / a2.b().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Bounded,
    Growing,
}

/// Finite-horizon evidence for `sup_k ||A_1^k A_2^{-floor(eps k)}|| < inf`.
#[derive(Debug, Clone, Serialize)]
pub struct BruteForce {
    pub verdict: Growth,
    /// `max_k ||M_k||`; infinite if it overflows `f64`.
    #[serde(serialize_with = "finite_or_null")]
    pub max_norm: f64,
    pub log_max_norm: f64,
    /// Slope of `ln ||M_k||` against `|k|`.
    pub trend: f64,
    pub r_squared: f64,
    /// Slope and fit quality of `ln ||M_k||` against `ln(1 + |k|)`.
    pub log_trend: f64,
    pub log_r_squared: f64,
    pub horizon: u32,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-24 * (1.0 + my * my) * n {
        0.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

/// `ln ||A_1^k A_2^{-floor(eps k)}||` for `k = 0, ±1, ..., ±K`, in the order `(k, value)`.
///
/// The products are advanced one step at a time and renormalized, so the
/// logarithms stay finite far past the overflow threshold.
pub fn log_norm_sequence(a1: &Dilation, a2: &Dilation, horizon: u32) -> Result<Vec<(i64, f64)>> {
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        });
    }
    if horizon > MAX_HORIZON {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} exceeds {MAX_HORIZON}"
        )));
    }
    let eps = epsilon(a1, a2);
    let n = a1.dim();
    let a1_inv = matrix_power(a1.matrix(), -1)?;
    let exponent = |k: i64| (eps * k as f64).floor() as i64;

    let mut out = vec![(0i64, 0.0)];
    for dir in [1i64, -1] {
        let mut m = Matrix::identity(n, n);
        let mut log_scale = 0.0;
        let mut j = 0i64;
        for step in 1..=horizon as i64 {
            let k = dir * step;
            let j_next = exponent(k);
            let right = matrix_power(a2.matrix(), j - j_next)?;
            m = if dir > 0 {
                a1.matrix() * m
            } else {
                &a1_inv * m
            } * right;
            j = j_next;
            let size = norm2(&m);
            if !(size > 0.0) || !size.is_finite() {
                return Err(Error::Overflow);
            }
            log_scale += size.ln();
            m /= size;
            out.push((k, log_scale));
        }
    }
    out.sort_by_key(|(k, _)| *k);
    Ok(out)
}

/// Heuristic: `growing` if `ln ||M_k||` trends upward in `|k|` or in `ln(1 + |k|)`
/// (slope above 0.01 with `R^2 > 0.9`), else `bounded`.
pub fn brute_force_equivalent(a1: &Dilation, a2: &Dilation, horizon: u32) -> Result<BruteForce> {
    let seq = log_norm_sequence(a1, a2, horizon)?;
    let ys: Vec<f64> = seq.iter().map(|(_, y)| *y).collect();
    let abs_k: Vec<f64> = seq.iter().map(|(k, _)| k.unsigned_abs() as f64).collect();
    let log_k: Vec<f64> = abs_k.iter().map(|k| k.ln_1p()).collect();
    let (trend, r_squared) = linear_fit(&abs_k, &ys);
    let (log_trend, log_r_squared) = linear_fit(&log_k, &ys);
    let growing = (trend > TREND_SLOPE && r_squared > TREND_R2)
        || (log_trend > TREND_SLOPE && log_r_squared > TREND_R2);
    let log_max_norm = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BruteForce {
        verdict: if growing {
            Growth::Growing
        } else {
            Growth::Bounded
        },
        max_norm: log_max_norm.exp(),
        log_max_norm,
        trend,
        r_squared,
        log_trend,
        log_r_squared,
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plain,
    #[serde(rename = "linear")]
    UpToLinear,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Plain {
        generator_distance: f64,
        generator_1: Vec<Vec<f64>>,
        generator_2: Vec<Vec<f64>>,
        brute_force: Option<BruteForce>,
        /// The heuristic reports growth although the generators agree.
        brute_force_contradicts: bool,
    },
    UpToLinear {
        signature_1: JordanSignature,
        signature_2: JordanSignature,
        /// Magnitudes of the second signature raised to `eps`.
        rescaled_magnitudes_2: Vec<f64>,
        unmatched: Vec<String>,
    },
}

/// Serialized as `{mode, equivalent, epsilon, witness}`.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceVerdict {
    pub mode: Mode,
    pub equivalent: bool,
    pub epsilon: f64,
    pub witness: Witness,
}

pub(crate) fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Plain equivalence: the trace-one generators coincide.
///
/// With `horizon > 0` the verdict also carries a brute-force run over
/// `|k| <= horizon` and flags when it contradicts an "equivalent" verdict.
pub fn equivalent(a1: &Dilation, a2: &Dilation, horizon: u32) -> Result<EquivalenceVerdict> {
    equivalent_with(a1, a2, horizon, GENERATOR_TOL)
}

/// [`equivalent`] with an explicit bound on `||P_1 - P_2||_2`.
pub fn equivalent_with(a1: &Dilation, a2: &Dilation, horizon: u32, generator_tol: f64) -> Result<EquivalenceVerdict> {
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        });
    }
    let p1 = associated_generator(a1)?;
    let p2 = associated_generator(a2)?;
    let distance = norm2(&(p1.matrix() - p2.matrix()));
    let equivalent = distance <= generator_tol;
    let brute_force = if horizon > 0 {
        Some(brute_force_equivalent(a1, a2, horizon)?)
    } else {
        None
    };
    let brute_force_contradicts = equivalent
        && brute_force
            .as_ref()
            .is_some_and(|b| b.verdict == Growth::Growing);
    Ok(EquivalenceVerdict {
        mode: Mode::Plain,
        equivalent,
        epsilon: epsilon(a1, a2),
        witness: Witness::Plain {
            generator_distance: distance,
            generator_1: rows(p1.matrix()),
            generator_2: rows(p2.matrix()),
            brute_force,
            brute_force_contradicts,
        },
    })
}

/// Equivalence up to a linear change of variables: the Jordan signature of
/// `A_1` equals that of `A_2` with every magnitude raised to `eps`.
pub fn lin_equivalent(a1: &Dilation, a2: &Dilation) -> Result<EquivalenceVerdict> {
    lin_equivalent_with(a1, a2, &Tolerances::default(), LOG_MAGNITUDE_TOL)
}

/// [`lin_equivalent`] with explicit spectral tolerances and log-magnitude bound.
pub fn lin_equivalent_with(
    a1: &Dilation,
    a2: &Dilation,
    tols: &Tolerances,
    log_tol: f64,
) -> Result<EquivalenceVerdict> {
    if a1.dim() != a2.dim() {
        return Err(Error::DimensionMismatch {
            expected: a1.dim(),
            found: a2.dim(),
        });
    }
    let s1 = jordan_signature(a1.matrix(), tols)?;
    let s2 = jordan_signature(a2.matrix(), tols)?;
    let eps = epsilon(a1, a2);
    let g1 = s1.groups();
    let g2 = s2.groups();
    let mut unmatched = Vec::new();
    for i in 0..g1.len().max(g2.len()) {
        match (g1.get(i), g2.get(i)) {
            (Some((r1, p1)), Some((r2, p2))) => {
                if p1 != p2 || (r1.ln() - eps * r2.ln()).abs() > log_tol {
                    unmatched.push(format!("{r1} {p1:?} vs {} {p2:?}", r2.powf(eps)));
                }
            }
            (Some((r1, p1)), None) => unmatched.push(format!("{r1} {p1:?} vs none")),
            (None, Some((r2, p2))) => unmatched.push(format!("none vs {} {p2:?}", r2.powf(eps))),
            (None, None) => unreachable!(),
        }
    }
    Ok(EquivalenceVerdict {
        mode: Mode::UpToLinear,
        equivalent: unmatched.is_empty(),
        epsilon: eps,
        witness: Witness::UpToLinear {
            rescaled_magnitudes_2: g2.iter().map(|(r, _)| r.powf(eps)).collect(),
            signature_1: s1,
            signature_2: s2,
            unmatched,
        },
    })
}

/// One eigenvalue of a canonical representative with its Jordan block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalBlock {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Non-increasing block sizes summing to `multiplicity`.
    pub partition: Vec<usize>,
}

/// Block-diagonal Jordan representative with determinant 2.
///
/// Eigenvalues ascend; each carries the partition of its multiplicity into block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalDilation {
    pub blocks: Vec<CanonicalBlock>,
}

impl CanonicalDilation {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.multiplicity).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidParameter("no blocks".into()));
        }
        let mut log_det = 0.0;
        for (i, b) in self.blocks.iter().enumerate() {
            if !(b.eigenvalue > 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "eigenvalue {} must exceed 1",
                    b.eigenvalue
                )));
            }
            if i > 0 && !(self.blocks[i - 1].eigenvalue < b.eigenvalue) {
                return Err(Error::InvalidParameter("eigenvalues must ascend".into()));
            }
            if b.partition.iter().sum::<usize>() != b.multiplicity
                || b.partition.contains(&0)
                || b.partition.windows(2).any(|w| w[0] < w[1])
            {
                return Err(Error::InvalidParameter(format!(
                    "{:?} is not a partition of {}",
                    b.partition, b.multiplicity
                )));
            }
            log_det += b.multiplicity as f64 * b.eigenvalue.ln();
        }
        if (log_det - std::f64::consts::LN_2).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "determinant {} differs from 2",
                log_det.exp()
            )));
        }
        Ok(())
    }

    /// Same partitions and eigenvalues equal to `tol` relatively.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| {
                a.partition == b.partition
                    && (a.eigenvalue - b.eigenvalue).abs() <= tol * a.eigenvalue
            })
    }
}

/// Canonical representative of the linear-equivalence class of `A`: every
/// magnitude `r` becomes `r^{1 / log2 |det A|}` so the determinant is 2.
pub fn canonical_form(a: &Dilation) -> Result<CanonicalDilation> {
    canonical_form_with(a, &Tolerances::default())
}

pub fn canonical_form_with(a: &Dilation, tols: &Tolerances) -> Result<CanonicalDilation> {
    let signature = jordan_signature(a.matrix(), tols)?;
    let alpha = a.b().log2();
    let blocks = signature
        .groups()
        .into_iter()
        .map(|(r, partition)| CanonicalBlock {
            eigenvalue: r.powf(1.0 / alpha),
            multiplicity: partition.iter().sum(),
            partition,
        })
        .collect();
    Ok(CanonicalDilation { blocks })
}

/// Block-diagonal matrix of Jordan blocks `J(lambda_i, size)`.
pub fn realize(c: &CanonicalDilation) -> Matrix {
    let n = c.dim();
    let mut m = Matrix::zeros(n, n);
    let mut at = 0;
    for block in &c.blocks {
        for &size in &block.partition {
            for i in 0..size {
                m[(at + i, at + i)] = block.eigenvalue;
                if i + 1 < size {
                    m[(at + i, at + i + 1)] = 1.0;
                }
            }
            at += size;
        }
    }
    m
}

/// All partitions of `n` as non-increasing lists, in ascending lexicographic order.
pub fn partitions(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > MAX_PARTITION_N {
        return Err(Error::InvalidParameter(format!(
            "n = {n} outside 1..={MAX_PARTITION_N}"
        )));
    }
    fn extend(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in 1..=rest.min(max) {
            prefix.push(part);
            extend(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(n, n, &mut Vec::new(), &mut out);
    Ok(out)
}

/// `p(n)`, the number of partitions of `n`.
pub fn partition_count(n: usize) -> Result<u64> {
    if n == 0 || n > MAX_PARTITION_N {
        return Err(Error::InvalidParameter(format!(
            "n = {n} outside 1..={MAX_PARTITION_N}"
        )));
    }
    let mut ways = vec![0u64; n + 1];
    ways[0] = 1;
    for part in 1..=n {
        for total in part..=n {
            ways[total] += ways[total - part];
        }
    }
    Ok(ways[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_rows};

    fn dil(m: Matrix) -> Dilation {
        Dilation::new(m).unwrap()
    }

    fn a_c(c: f64) -> Dilation {
        dil(from_rows(&[&[2.0, c], &[0.0, 2.0]]))
    }

    #[test]
    fn epsilon_examples() {
        let a = a_c(1.0);
        let a2 = dil(a.matrix() * a.matrix());
        assert_eq!(epsilon(&a, &a), 1.0);
        assert!((epsilon(&a, &a2) - 0.5).abs() < 1e-15);
        let e = epsilon(&dil(diag(&[2.0, 2.0])), &dil(diag(&[8.0, 8.0])));
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_examples() {
        let a = a_c(1.0);
        let same = brute_force_equivalent(&a, &a, 50).unwrap();
        assert_eq!(same.verdict, Growth::Bounded);
        assert!((same.max_norm - 1.0).abs() < 1e-12);

        let iso = dil(diag(&[2.0, 2.0]));
        assert_eq!(
            brute_force_equivalent(&a, &iso, 100).unwrap().verdict,
            Growth::Growing
        );

        let a3 = dil(a.matrix() * a.matrix() * a.matrix());
        assert_eq!(
            brute_force_equivalent(&a, &a3, 100).unwrap().verdict,
            Growth::Bounded
        );
    }

    #[test]
    fn brute_force_survives_huge_norms() {
        let a = dil(diag(&[2.0, 4.0]));
        let b = dil(diag(&[2.0, 8.0]));
        let r = brute_force_equivalent(&a, &b, 200).unwrap();
        assert_eq!(r.verdict, Growth::Growing);
        assert!(r.log_max_norm.is_finite());
    }

    #[test]
    fn plain_examples() {
        assert!(!equivalent(&a_c(1.0), &a_c(2.0), 0).unwrap().equivalent);
        assert!(
            !equivalent(&dil(diag(&[2.0, 2.0])), &a_c(1.0), 0)
                .unwrap()
                .equivalent
        );
        let a = a_c(1.0);
        let v = equivalent(&a, &dil(a.matrix() * a.matrix()), 100).unwrap();
        assert!(v.equivalent);
        match v.witness {
            Witness::Plain {
                brute_force_contradicts,
                ..
            } => assert!(!brute_force_contradicts),
            _ => unreachable!(),
        }
    }

    #[test]
    fn linear_examples() {
        assert!(lin_equivalent(&a_c(1.0), &a_c(5.0)).unwrap().equivalent);
        assert!(
            !lin_equivalent(&a_c(1.0), &dil(diag(&[2.0, 2.0])))
                .unwrap()
                .equivalent
        );
        let v = lin_equivalent(&dil(diag(&[2.0, 4.0])), &dil(diag(&[4.0, 16.0]))).unwrap();
        assert!(v.equivalent);
        assert!((v.epsilon - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conjugation_by_diag_is_exact() {
        let s = diag(&[5.0, 1.0]);
        let back = s.clone().try_inverse().unwrap() * a_c(5.0).matrix() * s;
        assert_eq!(back, *a_c(1.0).matrix());
    }

    #[test]
    fn verdict_json_shape() {
        let v = lin_equivalent(&a_c(1.0), &a_c(5.0)).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["mode"], "linear");
        assert_eq!(json["equivalent"], true);
        assert!(json["witness"]["signature_1"].is_object());
    }

    #[test]
    fn canonical_examples() {
        let sqrt2 = 2f64.sqrt();
        let c = canonical_form(&dil(diag(&[2.0, 2.0]))).unwrap();
        assert_eq!(c.blocks.len(), 1);
        assert!((c.blocks[0].eigenvalue - sqrt2).abs() < 1e-14);
        assert_eq!(c.blocks[0].partition, vec![1, 1]);
        assert!((realize(&c).determinant() - 2.0).abs() < 1e-12);

        let c = canonical_form(&a_c(1.0)).unwrap();
        assert_eq!(c.blocks[0].partition, vec![2]);
        let want = from_rows(&[&[sqrt2, 1.0], &[0.0, sqrt2]]);
        assert!((realize(&c) - want).abs().max() < 1e-14);

        let c = canonical_form(&dil(diag(&[2.0, 3.0]))).unwrap();
        let alpha = 6f64.log2();
        assert!((c.blocks[0].eigenvalue - 2f64.powf(1.0 / alpha)).abs() < 1e-14);
        assert!((c.blocks[1].eigenvalue - 3f64.powf(1.0 / alpha)).abs() < 1e-14);
        assert!(c.validate().is_ok());
        assert!((realize(&c).determinant() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let c = canonical_form(&a_c(3.0)).unwrap();
        let again = canonical_form(&dil(realize(&c))).unwrap();
        assert!(c.approx_eq(&again, 1e-9));
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partitions(1).unwrap(), vec![vec![1]]);
        assert_eq!(partitions(4).unwrap().len(), 5);
        assert_eq!(partitions(5).unwrap().len(), 7);
        assert_eq!(
            partitions(3).unwrap(),
            vec![vec![1, 1, 1], vec![2, 1], vec![3]]
        );
        assert_eq!(partition_count(40).unwrap(), 37338);
        assert!(partitions(0).is_err());
        assert!(partitions(41).is_err());
    }
}
