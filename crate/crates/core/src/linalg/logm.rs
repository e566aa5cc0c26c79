use super::eig::raw_eigenvalues;
use super::{check_square, norm1, Matrix, Tolerances};
use crate::error::{Error, Result};

const MAX_SQRT_STEPS: u32 = 64;
const SERIES_RADIUS: f64 = 0.25;

/// Principal square root by the Denman-Beavers iteration.
///
/// Requires no eigenvalues on the closed negative real axis.
pub fn sqrtm_denman_beavers(m: &Matrix) -> Result<Matrix> {
    let n = check_square(m)?;
    let mut y = m.clone();
    let mut z = Matrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NonPositiveSpectrum {
                detail: "singular iterate in square root".into(),
            })?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NonPositiveSpectrum {
                detail: "singular iterate in square root".into(),
            })?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 4.0 * f64::EPSILON * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::NonPositiveSpectrum {
        detail: "square root iteration stalled".into(),
    })
}

/// Real logarithm of a matrix whose eigenvalues are all real and positive.
///
/// Inverse scaling and squaring: take principal square roots until the matrix
/// is close to the identity, sum `2 atanh(Z)` with `Z = (M - I)(M + I)^-1`,
/// then multiply by `2^s`.
pub fn logm_positive(m: &Matrix) -> Result<Matrix> {
    let n = check_square(m)?;
    let tol = Tolerances::default().jordan_cluster;
    let scale = m.norm();
    for lambda in raw_eigenvalues(m)? {
        if lambda.re <= 0.0 || lambda.im.abs() > tol * scale {
            return Err(Error::NonPositiveSpectrum {
                detail: format!("eigenvalue {lambda}"),
            });
        }
    }

    let ident = Matrix::identity(n, n);
    let mut x = m.clone();
    let mut steps = 0u32;
    while norm1(&(&x - &ident)) > SERIES_RADIUS {
        if steps == MAX_SQRT_STEPS {
            return Err(Error::NonPositiveSpectrum {
                detail: "square roots did not approach the identity".into(),
            });
        }
        x = sqrtm_denman_beavers(&x)?;
        steps += 1;
    }

    let z = (&x + &ident)
        .lu()
        .solve(&(&x - &ident))
        .ok_or_else(|| Error::NonPositiveSpectrum {
            detail: "singular M + I".into(),
        })?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z;
    for k in 1..200 {
        term = &term * &z2;
        let contribution = &term / (2 * k + 1) as f64;
        let size = contribution.norm();
        sum += contribution;
        if size <= f64::EPSILON * 1e-3 * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(sum * 2f64.powi(steps as i32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, expm, from_rows};

    #[test]
    fn identity_has_zero_log() {
        let l = logm_positive(&Matrix::identity(3, 3)).unwrap();
        assert!(l.abs().max() < 1e-16);
    }

    #[test]
    fn jordan_example() {
        let l = logm_positive(&from_rows(&[&[2.0, 1.0], &[0.0, 2.0]])).unwrap();
        let l2 = 2f64.ln();
        let want = from_rows(&[&[l2, 0.5], &[0.0, l2]]);
        assert!((l - want).abs().max() < 1e-13);
    }

    #[test]
    fn scalar_case() {
        let l = logm_positive(&diag(&[4.0])).unwrap();
        assert!((l[(0, 0)] - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn round_trips_through_expm() {
        let m = from_rows(&[&[3.0, 1.0, -2.0], &[0.0, 1.5, 4.0], &[0.0, 0.0, 7.0]]);
        let back = expm(&logm_positive(&m).unwrap()).unwrap();
        assert!((&back - &m).norm() / m.norm() < 1e-12);
    }

    #[test]
    fn rejects_negative_and_complex_spectra() {
        assert!(matches!(
            logm_positive(&diag(&[-2.0, 3.0])),
            Err(Error::NonPositiveSpectrum { .. })
        ));
        assert!(matches!(
            logm_positive(&from_rows(&[&[0.0, 2.0], &[-2.0, 0.0]])),
            Err(Error::NonPositiveSpectrum { .. })
        ));
    }

    #[test]
    fn square_root_squares_back() {
        let m = from_rows(&[&[4.0, 1.0], &[0.0, 9.0]]);
        let r = sqrtm_denman_beavers(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
    }
}
