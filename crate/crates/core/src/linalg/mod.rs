//! Dense linear algebra for small matrices (n <= 16).
//!
//! Everything here is a pure function of its inputs. Eigenvalues and singular
//! values come from `nalgebra`; the matrix exponential, the logarithm of a
//! positive-spectrum matrix, the Lyapunov solve and the generalized kernel
//! dimensions are implemented in this module.

mod eig;
mod expm;
mod jordan;
mod loewner;
mod logm;
mod lyapunov;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{eig, eigen_clusters, Eigenvalue, Spectrum};
pub use expm::expm;
pub use jordan::{
    generalized_eigenspace, generalized_kernel_dim, jordan_signature, JordanSignature,
    SignatureEntry,
};
pub use loewner::loewner_contains;
pub use logm::{logm_positive, sqrtm_denman_beavers};
pub use lyapunov::{lyapunov_quadrature, lyapunov_residual, solve_lyapunov};

/// Real dense matrix.
pub type Matrix = DMatrix<f64>;
/// Complex dense matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

/// Numerical policy for discrete decisions on floating-point spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative distance under which eigenvalues are reported as one cluster by [`eig`].
    pub cluster: f64,
    /// Relative singular-value threshold for numerical rank.
    pub rank: f64,
    /// Relative distance under which eigenvalues are grouped before Jordan analysis.
    ///
    /// Defective eigenvalues split by roughly `eps^(1/k)` for a block of size `k`,
    /// so this is much looser than `cluster`. Wrongly merged eigenvalues are caught
    /// by the generalized-eigenspace dimension check.
    pub jordan_cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cluster: 1e-9,
            rank: 1e-8,
            jordan_cluster: 1e-4,
        }
    }
}

/// Builds a matrix from row slices.
pub fn from_rows(rows: &[&[f64]]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Diagonal matrix with the given entries.
pub fn diag(entries: &[f64]) -> Matrix {
    Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries))
}

/// Validates that `m` is a finite square matrix with 1 <= n <= 16 and returns n.
pub fn check_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(n)
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Spectral norm of a complex matrix.
pub fn cnorm2(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// One-norm (maximum absolute column sum).
pub fn norm1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Lifts a real matrix to a complex one.
pub fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Integer power, negative exponents use the inverse.
pub fn matrix_power(m: &Matrix, k: i64) -> Result<Matrix> {
    let n = m.nrows();
    let mut base = if k < 0 {
        m.clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("negative power of a singular matrix".into()))?
    } else {
        m.clone()
    };
    let mut e = k.unsigned_abs();
    let mut acc = Matrix::identity(n, n);
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Ok(acc)
}

/// Absolute value of the determinant.
pub fn abs_det(m: &Matrix) -> f64 {
    m.clone().lu().determinant().abs()
}

/// Symmetric part `(m + m^T) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}
