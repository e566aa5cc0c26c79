use super::eig::raw_eigenvalues;
use super::expm::expm;
use super::{check_square, symmetrize, Matrix};
use crate::error::{Error, Result};

/// `BP + P^T B - I`.
pub fn lyapunov_residual(b: &Matrix, p: &Matrix) -> Matrix {
    let n = p.nrows();
    b * p + p.transpose() * b - Matrix::identity(n, n)
}

/// Solves `BP + P^T B = I` for the symmetric positive-definite `B`.
///
/// The equation is unrolled into the `n^2 x n^2` system
/// `(P^T (x) I + I (x) P^T) vec(B) = vec(I)` (column-major `vec`) and solved by
/// LU with two steps of iterative refinement.
pub fn solve_lyapunov(p: &Matrix) -> Result<Matrix> {
    let n = check_square(p)?;
    let min_re = raw_eigenvalues(p)?
        .iter()
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min);
    if min_re <= 0.0 {
        return Err(Error::NotExpansiveGenerator {
            detail: format!("eigenvalue real part {min_re} <= 0"),
        });
    }

    let pt = p.transpose();
    let ident = Matrix::identity(n, n);
    let system = pt.kronecker(&ident) + ident.kronecker(&pt);
    let lu = system.lu();
    let rhs = nalgebra::DVector::from_column_slice(ident.as_slice());
    let mut vec_b = lu.solve(&rhs).ok_or_else(|| Error::NotExpansiveGenerator {
        detail: "singular Lyapunov system".into(),
    })?;
    for _ in 0..2 {
        let b = Matrix::from_column_slice(n, n, vec_b.as_slice());
        let r = -lyapunov_residual(&b, p);
        let r = nalgebra::DVector::from_column_slice(r.as_slice());
        if let Some(correction) = lu.solve(&r) {
            vec_b += correction;
        }
    }

    let b = symmetrize(&Matrix::from_column_slice(n, n, vec_b.as_slice()));
    if b.clone().cholesky().is_none() {
        return Err(Error::NotExpansiveGenerator {
            detail: "Lyapunov solution is not positive definite".into(),
        });
    }
    Ok(b)
}

/// `B = int_0^inf exp(-s P^T) exp(-s P) ds` by adaptive Simpson quadrature.
///
/// An independent, slow check on [`solve_lyapunov`]. Panels double in length
/// until the integrand has decayed below `tol * min Re(lambda)`; `tol` bounds
/// the absolute error per entry.
pub fn lyapunov_quadrature(p: &Matrix, tol: f64) -> Result<Matrix> {
    let n = check_square(p)?;
    let min_re = raw_eigenvalues(p)?
        .iter()
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min);
    if min_re <= 0.0 {
        return Err(Error::NotExpansiveGenerator {
            detail: format!("eigenvalue real part {min_re} <= 0"),
        });
    }
    let f = |s: f64| -> Result<Matrix> {
        let e = expm(&(p * -s))?;
        Ok(e.transpose() * e)
    };
    let size = |m: &Matrix| m.abs().max();

    let mut total = Matrix::zeros(n, n);
    let (mut a, mut fa) = (0.0, Matrix::identity(n, n));
    let mut width = 0.25;
    loop {
        let b = a + width;
        let fb = f(b)?;
        let fm = f(0.5 * (a + b))?;
        total += simpson(&f, a, b, &fa, &fm, &fb, tol / 64.0, 48)?;
        if size(&fb) < tol * min_re * 1e-2 {
            break;
        }
        if b > 1e7 {
            return Err(Error::NotExpansiveGenerator {
                detail: "integrand decays too slowly for quadrature".into(),
            });
        }
        a = b;
        fa = fb;
        width *= 2.0;
    }
    Ok(symmetrize(&total))
}

#[allow(clippy::too_many_arguments)]
fn simpson<F>(f: &F, a: f64, b: f64, fa: &Matrix, fm: &Matrix, fb: &Matrix, tol: f64, depth: u32) -> Result<Matrix>
where
    F: Fn(f64) -> Result<Matrix>,
{
    let m = 0.5 * (a + b);
    let h = b - a;
    let whole = (fa + fm * 4.0 + fb) * (h / 6.0);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    let left = (fa + &flm * 4.0 + fm) * (h / 12.0);
    let right = (fm + &frm * 4.0 + fb) * (h / 12.0);
    let both = &left + &right;
    let err = (&both - &whole).abs().max();
    if depth == 0 || err <= 15.0 * tol {
        return Ok(&both + (&both - &whole) / 15.0);
    }
    Ok(simpson(f, a, m, fa, &flm, fm, tol / 2.0, depth - 1)? + simpson(f, m, b, fm, &frm, fb, tol / 2.0, depth - 1)?)
}
