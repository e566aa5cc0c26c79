use super::Matrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const ORDER_TOL: f64 = 1e-12;

fn check_symmetric(q: &Matrix) -> Result<()> {
    if q.nrows() != q.ncols() {
        return Err(Error::NotSquare {
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    let asymmetry = (q - q.transpose()).abs().max();
    if asymmetry > SYMMETRY_TOL * q.abs().max().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Whether the ellipsoid `{x : x^T Q_outer x <= 1}` contains `{x : x^T Q_inner x <= 1}`.
///
/// Containment holds iff `Q_outer <= Q_inner` in the Loewner order; the smallest
/// eigenvalue of `Q_inner - Q_outer` may undershoot zero by `1e-12 * ||Q_inner||`.
pub fn loewner_contains(q_outer: &Matrix, q_inner: &Matrix) -> Result<bool> {
    check_symmetric(q_outer)?;
    check_symmetric(q_inner)?;
    if q_outer.nrows() != q_inner.nrows() {
        return Err(Error::DimensionMismatch {
            expected: q_outer.nrows(),
            found: q_inner.nrows(),
        });
    }
    let diff = super::symmetrize(&(q_inner - q_outer));
    let min_eig = diff.symmetric_eigenvalues().min();
    let scale = q_inner.abs().max().max(q_outer.abs().max());
    Ok(min_eig >= -ORDER_TOL * scale)
}
