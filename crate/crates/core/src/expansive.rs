//! Expansivity of matrices and generators, and the discrete geometry of a dilation:
//! nested canonical ellipsoids, the step quasi-norm and the constant `omega`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    abs_det, check_square, eig, expm, loewner_contains, matrix_power, norm2, symmetrize, Matrix,
    Spectrum, Tolerances,
};

/// Margin by which every eigenvalue modulus must exceed one.
pub const EXPANSIVE_MARGIN: f64 = 1e-10;
/// Largest power of `exp(-P ln 2)` tried by [`expansivity_certificate`].
pub const MAX_CERTIFICATE_POWER: u32 = 200;
/// Contraction required of `A_{1/t0}`, beyond rounding of an isometry.
pub const CERTIFICATE_MARGIN: f64 = 1e-12;
/// Range of levels `[-K, K]` checked for nesting.
pub const NESTING_LEVELS: i32 = 20;
/// Largest `omega` searched.
pub const OMEGA_CAP: u32 = 100;

/// `ln t` at which the decay proxy for `lim_{t -> 0} |A_t x| = 0` is evaluated.
pub const DECAY_PROXY_LOG_TIME: f64 = -8192.0;
/// Number of random unit vectors used by the decay proxy.
pub const DECAY_PROXY_SAMPLES: usize = 50;
/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Expansive matrix with cached `b = |det A|` and spectrum.
#[derive(Debug, Clone)]
pub struct Dilation {
    matrix: Matrix,
    det_abs: f64,
    spectrum: Spectrum,
}

impl Dilation {
    pub fn new(matrix: Matrix) -> Result<Self> {
        check_square(&matrix)?;
        let spectrum = eig(&matrix, Tolerances::default().cluster)?;
        let min_modulus = spectrum.min_modulus();
        if min_modulus <= 1.0 + EXPANSIVE_MARGIN {
            return Err(Error::NotExpansive { min_modulus });
        }
        let det_abs = abs_det(&matrix);
        Ok(Self {
            matrix,
            det_abs,
            spectrum,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `b = |det A|`.
    pub fn b(&self) -> f64 {
        self.det_abs
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// True iff every eigenvalue of `a` has modulus above `1 + EXPANSIVE_MARGIN`.
pub fn is_expansive_matrix(a: &Matrix) -> Result<bool> {
    let s = eig(a, Tolerances::default().cluster)?;
    Ok(s.min_modulus() > 1.0 + EXPANSIVE_MARGIN)
}

/// Witness that `|A_{t0} x| >= c0 |x|` for all `x`, with `t0 = 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub k: u32,
    pub t0: f64,
    pub c0: f64,
}

/// Finds the least `k <= 200` with `||exp(-P ln 2)^k|| < 1` and returns
/// `t0 = 2^k`, `c0 = 1 / ||A_{1/t0}||`.
pub fn expansivity_certificate(p: &Matrix) -> Result<Certificate> {
    check_square(p)?;
    let half = expm(&(p * -std::f64::consts::LN_2))?;
    let mut power = half.clone();
    for k in 1..=MAX_CERTIFICATE_POWER {
        let norm = norm2(&power);
        if norm < 1.0 - CERTIFICATE_MARGIN {
            return Ok(Certificate {
                k,
                t0: 2f64.powi(k as i32),
                c0: 1.0 / norm,
            });
        }
        if !norm.is_finite() {
            break;
        }
        power = &power * &half;
    }
    Err(Error::CertificateNotFound {
        max_k: MAX_CERTIFICATE_POWER,
    })
}

/// Numerical stand-in for `lim_{t -> 0} |A_t x| = 0`: every sampled unit `x`
/// must satisfy `|A_t x| < 0.1` at `ln t = DECAY_PROXY_LOG_TIME`.
pub fn decay_proxy<R: Rng + ?Sized>(p: &Matrix, samples: usize, rng: &mut R) -> Result<bool> {
    let n = check_square(p)?;
    let a_small = match expm(&(p * DECAY_PROXY_LOG_TIME)) {
        Ok(m) => m,
        Err(Error::Overflow) => return Ok(false),
        Err(e) => return Err(e),
    };
    for _ in 0..samples {
        let mut x = nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        x /= norm;
        let y = &a_small * x;
        let len = y.norm();
        if !(len < 0.1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which of the three equivalent expansivity conditions were verified.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorWitness {
    pub expansive: bool,
    pub min_real_part: f64,
    /// Every eigenvalue has positive real part.
    pub spectral: bool,
    /// `|A_t x| -> 0` as `t -> 0` (sampled proxy).
    pub decay: bool,
    /// `|A_{t0} x| >= c0 |x|` with `c0 > 1`.
    pub certificate: Option<Certificate>,
}

impl GeneratorWitness {
    /// All three conditions agree.
    pub fn consistent(&self) -> bool {
        self.spectral == self.decay && self.spectral == self.certificate.is_some()
    }
}

/// Decides whether `P` generates an expansive continuous group.
///
/// The verdict is the spectral condition `Re(lambda) > 0`; the witness also
/// records the decay proxy (seeded, deterministic) and the certificate search.
pub fn is_expansive_generator(p: &Matrix) -> Result<GeneratorWitness> {
    is_expansive_generator_seeded(p, DEFAULT_SEED)
}

/// [`is_expansive_generator`] with an explicit seed for the decay proxy.
pub fn is_expansive_generator_seeded(p: &Matrix, seed: u64) -> Result<GeneratorWitness> {
    let spectrum = eig(p, Tolerances::default().cluster)?;
    let min_real_part = spectrum.min_real_part();
    let spectral = min_real_part > 0.0;
    let mut rng = StdRng::seed_from_u64(seed);
    let decay = decay_proxy(p, DECAY_PROXY_SAMPLES, &mut rng)?;
    let certificate = match expansivity_certificate(p) {
        Ok(c) => Some(c),
        Err(Error::CertificateNotFound { .. }) | Err(Error::Overflow) => None,
        Err(e) => return Err(e),
    };
    Ok(GeneratorWitness {
        expansive: spectral,
        min_real_part,
        spectral,
        decay,
        certificate,
    })
}

/// Volume of the Euclidean unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        let next = 2.0 * std::f64::consts::PI / k as f64 * v[k % 2];
        v[k % 2] = next;
    }
    v[n % 2]
}

/// Nested ellipsoids `B_k = {x : x^T Q_k x <= 1}` with `B_{k+1} = A(B_k)` and `|B_0| = 1`.
#[derive(Debug, Clone)]
pub struct EllipsoidFamily {
    dilation: Dilation,
    q0: Matrix,
}

impl EllipsoidFamily {
    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn q0(&self) -> &Matrix {
        &self.q0
    }

    /// `Q_k = A^{-k T} Q_0 A^{-k}`.
    pub fn q_level(&self, k: i64) -> Matrix {
        let pk = matrix_power(self.dilation.matrix(), -k).expect("dilation is invertible");
        symmetrize(&(pk.transpose() * &self.q0 * pk))
    }

    /// Closed membership `x in B_k`.
    pub fn contains(&self, k: i64, x: &[f64]) -> bool {
        let pk = matrix_power(self.dilation.matrix(), -k).expect("dilation is invertible");
        let y = pk * nalgebra::DVector::from_column_slice(x);
        y.dot(&(&self.q0 * &y)) <= 1.0
    }

    /// Lebesgue measure of `B_k`, from `det Q_k`.
    pub fn volume(&self, k: i64) -> f64 {
        let q = self.q_level(k);
        unit_ball_volume(q.nrows()) / q.determinant().sqrt()
    }

    /// Exponent `j` with `x in B_{j+1} \ B_j`, or `None` for `x = 0`.
    pub fn step_exponent(&self, x: &[f64]) -> Option<i64> {
        if x.iter().all(|v| *v == 0.0) {
            return None;
        }
        // Smallest k with x in B_k; membership is monotone in k.
        let (mut outside, mut inside) = if self.contains(0, x) {
            let mut step = 1i64;
            loop {
                if !self.contains(-step, x) {
                    break (-step, -step / 2);
                }
                step *= 2;
            }
        } else {
            let mut step = 1i64;
            loop {
                if self.contains(step, x) {
                    break (step / 2, step);
                }
                step *= 2;
            }
        };
        while inside - outside > 1 {
            let mid = outside + (inside - outside) / 2;
            if self.contains(mid, x) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Some(inside - 1)
    }
}

/// Builds the canonical ellipsoid family of `A`.
///
/// `Q_0` solves the Stein equation `Q - A^{-T} Q A^{-1} = I`, so
/// `Q_1 = Q_0 - I < Q_0` and the family nests strictly; it is then scaled to
/// unit volume. Nesting is re-verified for `|k| <= 20`.
pub fn canonical_ellipsoids(a: &Dilation) -> Result<EllipsoidFamily> {
    let n = a.dim();
    let inv_t = a
        .matrix()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular dilation".into()))?
        .transpose();
    let ident = Matrix::identity(n, n);
    let system = Matrix::identity(n * n, n * n) - inv_t.kronecker(&inv_t);
    let rhs = nalgebra::DVector::from_column_slice(ident.as_slice());
    let vec_q = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NestingFailure { level: 0 })?;
    let q = symmetrize(&Matrix::from_column_slice(n, n, vec_q.as_slice()));
    let det = q.determinant();
    if !(det > 0.0) {
        return Err(Error::NestingFailure { level: 0 });
    }
    let vn = unit_ball_volume(n);
    let scale = (vn * vn / det).powf(1.0 / n as f64);
    let family = EllipsoidFamily {
        dilation: a.clone(),
        q0: q * scale,
    };

    for k in -NESTING_LEVELS..NESTING_LEVELS {
        let inner = family.q_level(k as i64);
        let outer = family.q_level(k as i64 + 1);
        if !loewner_contains(&outer, &inner)? {
            return Err(Error::NestingFailure { level: k });
        }
    }
    if (family.volume(0) - 1.0).abs() > 1e-10 {
        return Err(Error::NestingFailure { level: 0 });
    }
    Ok(family)
}

/// Step quasi-norm `rho_A(x) = b^j` for `x in B_{j+1} \ B_j`, and `0` at the origin.
pub fn step_quasi_norm(family: &EllipsoidFamily, x: &[f64]) -> f64 {
    match family.step_exponent(x) {
        None => 0.0,
        Some(j) => family.dilation.b().powi(j as i32),
    }
}

/// Least `omega >= 1` with `2 B_0 in B_omega`, i.e. `Q_omega <= Q_0 / 4`.
pub fn omega_constant(family: &EllipsoidFamily) -> Result<u32> {
    let doubled = family.q0() / 4.0;
    for omega in 1..=OMEGA_CAP {
        if loewner_contains(&family.q_level(omega as i64), &doubled)? {
            return Ok(omega);
        }
    }
    Err(Error::OmegaNotFound { cap: OMEGA_CAP })
}

/// A dilation's step quasi-norm together with its triangle constant `b^omega`.
#[derive(Debug, Clone)]
pub struct StepQuasiNorm {
    family: EllipsoidFamily,
    omega: u32,
}

impl StepQuasiNorm {
    pub fn new(dilation: &Dilation) -> Result<Self> {
        let family = canonical_ellipsoids(dilation)?;
        let omega = omega_constant(&family)?;
        Ok(Self { family, omega })
    }

    pub fn family(&self) -> &EllipsoidFamily {
        &self.family
    }

    pub fn omega(&self) -> u32 {
        self.omega
    }

    /// Quasi-triangle constant `b^omega`.
    pub fn triangle_constant(&self) -> f64 {
        self.family.dilation.b().powi(self.omega as i32)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        step_quasi_norm(&self.family, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, from_rows};

    fn jordan(c: f64) -> Matrix {
        from_rows(&[&[2.0, c], &[0.0, 2.0]])
    }

    #[test]
    fn expansive_matrix_examples() {
        assert!(is_expansive_matrix(&jordan(1.0)).unwrap());
        assert!(!is_expansive_matrix(&Matrix::identity(2, 2)).unwrap());
        assert!(!is_expansive_matrix(&diag(&[2.0, 0.5])).unwrap());
        assert!(matches!(
            Dilation::new(diag(&[2.0, 0.5])),
            Err(Error::NotExpansive { .. })
        ));
    }

    #[test]
    fn generator_examples() {
        let w = is_expansive_generator(&diag(&[0.5, 0.5])).unwrap();
        assert!(w.expansive && w.consistent());
        let w = is_expansive_generator(&from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        assert!(!w.expansive && w.consistent());
        for c in [0.0, 1.0, 5.0, 10.0, -3.0] {
            let p = from_rows(&[&[0.5, c / (2.0 * 2f64.ln())], &[0.0, 0.5]]);
            let w = is_expansive_generator(&p).unwrap();
            assert!(w.expansive && w.consistent(), "c = {c}");
        }
    }

    #[test]
    fn certificate_examples() {
        let c = expansivity_certificate(&diag(&[0.5, 0.5])).unwrap();
        assert_eq!(c.t0, 2.0);
        assert!((c.c0 - 2f64.sqrt()).abs() < 1e-14);

        let c = expansivity_certificate(&diag(&[1.0, 1.0])).unwrap();
        assert_eq!(c.t0, 2.0);
        assert!((c.c0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn certificate_fails_for_rotation() {
        let p = from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(matches!(
            expansivity_certificate(&p),
            Err(Error::CertificateNotFound { .. })
        ));
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn isotropic_family_is_unit_disk_scaled() {
        let fam = canonical_ellipsoids(&Dilation::new(diag(&[2.0, 2.0])).unwrap()).unwrap();
        let pi = std::f64::consts::PI;
        assert!((fam.q0() - diag(&[pi, pi])).abs().max() < 1e-12);
        assert!((fam.volume(3) - 64.0).abs() < 1e-9);
    }

    #[test]
    fn diagonal_family_is_axis_aligned() {
        let fam = canonical_ellipsoids(&Dilation::new(diag(&[2.0, 3.0])).unwrap()).unwrap();
        assert!(fam.q0()[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn jordan_family_nests_and_is_tilted() {
        let fam = canonical_ellipsoids(&Dilation::new(jordan(1.0)).unwrap()).unwrap();
        assert!(fam.q0()[(0, 1)].abs() > 1e-3);
    }

    #[test]
    fn complex_spectrum_with_skewed_basis_nests() {
        // 2 * rotation conjugated by a badly skewed basis
        let s = from_rows(&[&[1.0, 5.0], &[0.0, 1.0]]);
        let r = from_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]);
        let a = &s * r * s.clone().try_inverse().unwrap();
        assert!(canonical_ellipsoids(&Dilation::new(a).unwrap()).is_ok());
    }

    #[test]
    fn step_norm_zero_and_boundary() {
        let fam = canonical_ellipsoids(&Dilation::new(diag(&[2.0, 2.0])).unwrap()).unwrap();
        assert_eq!(step_quasi_norm(&fam, &[0.0, 0.0]), 0.0);
        // boundary radius of B_0 is 1/sqrt(pi)
        let r = 1.0 / std::f64::consts::PI.sqrt();
        assert_eq!(step_quasi_norm(&fam, &[r * (1.0 + 1e-9), 0.0]), 1.0);
        assert_eq!(step_quasi_norm(&fam, &[r * (1.0 - 1e-9), 0.0]), 0.25);
    }

    #[test]
    fn omega_examples() {
        let fam = canonical_ellipsoids(&Dilation::new(diag(&[2.0, 2.0])).unwrap()).unwrap();
        assert_eq!(omega_constant(&fam).unwrap(), 1);
        let fam = canonical_ellipsoids(&Dilation::new(diag(&[4.0])).unwrap()).unwrap();
        assert_eq!(omega_constant(&fam).unwrap(), 1);

        let fam = canonical_ellipsoids(&Dilation::new(jordan(1.0)).unwrap()).unwrap();
        let w = omega_constant(&fam).unwrap();
        let doubled = fam.q0() / 4.0;
        assert!(loewner_contains(&fam.q_level(w as i64), &doubled).unwrap());
        if w > 1 {
            assert!(!loewner_contains(&fam.q_level(w as i64 - 1), &doubled).unwrap());
        }
    }
}
