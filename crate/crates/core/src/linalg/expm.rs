use super::{check_square, norm1, Matrix};
use crate::error::{Error, Result};

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest one-norm for which the [m/m] Pade approximant is accurate to unit roundoff.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

fn pade_low(a: &Matrix, coeffs: &[f64]) -> (Matrix, Matrix) {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let mut u = &ident * coeffs[1];
    let mut v = &ident * coeffs[0];
    let mut pow = ident;
    for j in (2..coeffs.len()).step_by(2) {
        pow = &pow * &a2;
        v += &pow * coeffs[j];
        if j + 1 < coeffs.len() {
            u += &pow * coeffs[j + 1];
        }
    }
    (a * u, v)
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.nrows();
    let b = &B13;
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];
    (u, v)
}

/// Matrix exponential by scaling and squaring with a degree-adaptive Pade approximant.
pub fn expm(x: &Matrix) -> Result<Matrix> {
    let n = check_square(x)?;
    let norm = norm1(x);
    if norm == 0.0 {
        return Ok(Matrix::identity(n, n));
    }

    let mut squarings = 0u32;
    let (u, v) = if let Some(&(m, _)) = THETA.iter().find(|(_, theta)| norm <= *theta) {
        let coeffs: &[f64] = match m {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        pade_low(x, coeffs)
    } else {
        let s = (norm / THETA13).log2().ceil().max(0.0);
        if s > 1000.0 {
            return Err(Error::Overflow);
        }
        squarings = s as u32;
        let scaled = x / 2f64.powi(squarings as i32);
        pade13(&scaled)
    };

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom.lu().solve(&numer).ok_or(Error::Overflow)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_rows};

    /// Plain Taylor series; adequate for small norms.
    fn series_exp(x: &Matrix) -> Matrix {
        let n = x.nrows();
        let mut term = Matrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..80 {
            term = &term * x / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_maps_to_identity() {
        let e = expm(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(e, Matrix::identity(3, 3));
    }

    #[test]
    fn jordan_example() {
        let l2 = 2f64.ln();
        let e = expm(&from_rows(&[&[l2, 0.5], &[0.0, l2]])).unwrap();
        let want = from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]);
        assert!((e - want).abs().max() < 1e-14);
    }

    #[test]
    fn diagonal_logs() {
        let e = expm(&diag(&[2f64.ln(), 3f64.ln()])).unwrap();
        assert!((e - diag(&[2.0, 3.0])).abs().max() < 1e-14);
    }

    #[test]
    fn matches_series_for_every_pade_degree() {
        for scale in [0.005, 0.1, 0.5, 1.5, 2.0, 4.0] {
            let x = from_rows(&[&[0.3, -0.2, 0.1], &[0.4, 0.1, -0.5], &[-0.1, 0.2, 0.2]]) * scale;
            let a = expm(&x).unwrap();
            let b = series_exp(&x);
            assert!((&a - &b).norm() / b.norm() < 1e-13, "scale {scale}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let x = diag(&[1e6, 1.0]);
        assert!(matches!(expm(&x), Err(Error::Overflow)));
    }
}
