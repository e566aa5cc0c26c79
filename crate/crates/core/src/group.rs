//! Continuous dilation groups `A_t = exp(P ln t)`, their norm-inducing forms and
//! the smooth homogeneous quasi-norm.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansive::Dilation;
use crate::linalg::{
    check_square, eig, eigen_clusters, expm, generalized_eigenspace, logm_positive, solve_lyapunov,
    CMatrix, Matrix, Tolerances,
};

const TRACE_TOL: f64 = 1e-12;
const ROOT_REL_TOL: f64 = 1e-13;
const ROOT_MAX_ITER: usize = 300;

/// Generator `P` of a continuous group; every eigenvalue has positive real part.
#[derive(Debug, Clone)]
pub struct Generator {
    p: Matrix,
    trace_normalized: bool,
}

impl Generator {
    pub fn new(p: Matrix) -> Result<Self> {
        check_square(&p)?;
        let min_re = eig(&p, Tolerances::default().cluster)?.min_real_part();
        if !(min_re > 0.0) {
            return Err(Error::NotExpansiveGenerator {
                detail: format!("minimal real part {min_re}"),
            });
        }
        let trace_normalized = (p.trace() - 1.0).abs() <= TRACE_TOL;
        Ok(Self {
            p,
            trace_normalized,
        })
    }

    /// `P / tr(P)`.
    pub fn normalized(p: Matrix) -> Result<Self> {
        let g = Self::new(p)?;
        let tr = g.p.trace();
        Ok(Self {
            p: g.p / tr,
            trace_normalized: true,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.p.trace()
    }

    pub fn is_trace_normalized(&self) -> bool {
        self.trace_normalized
    }

    /// Generator `P^T` of the adjoint group.
    pub fn transpose(&self) -> Self {
        Self {
            p: self.p.transpose(),
            trace_normalized: self.trace_normalized,
        }
    }
}

/// Symmetric positive-definite `B` with `BP + P^T B = I`.
#[derive(Debug, Clone)]
pub struct NormInducingForm {
    b: Matrix,
}

impl NormInducingForm {
    pub fn new(generator: &Generator) -> Result<Self> {
        Ok(Self {
            b: solve_lyapunov(generator.matrix())?,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.b
    }

    /// `<Bx, x>`.
    pub fn quadratic(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.b * x))
    }
}

/// Which side of the group a quasi-norm is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

/// The group `{A_t}` with its primal and dual norm-inducing forms.
#[derive(Debug, Clone)]
pub struct ContinuousGroup {
    generator: Generator,
    form: NormInducingForm,
    dual_form: NormInducingForm,
}

impl ContinuousGroup {
    pub fn new(generator: Generator) -> Result<Self> {
        let form = NormInducingForm::new(&generator)?;
        let dual_form = NormInducingForm::new(&generator.transpose())?;
        Ok(Self {
            generator,
            form,
            dual_form,
        })
    }

    /// Group of the trace-one generator associated with `a`.
    pub fn from_dilation(a: &Dilation) -> Result<Self> {
        Self::new(associated_generator(a)?)
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn form(&self, side: Side) -> &NormInducingForm {
        match side {
            Side::Primal => &self.form,
            Side::Dual => &self.dual_form,
        }
    }

    fn side_matrix(&self, side: Side) -> Matrix {
        match side {
            Side::Primal => self.generator.p.clone(),
            Side::Dual => self.generator.p.transpose(),
        }
    }

    /// `A_t`, or `A_t^T` on the dual side.
    pub fn evaluate_side(&self, t: f64, side: Side) -> Result<Matrix> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "group parameter t = {t} must be > 0"
            )));
        }
        let n = self.dim();
        if t == 1.0 {
            return Ok(Matrix::identity(n, n));
        }
        expm(&(self.side_matrix(side) * t.ln()))
    }

    /// `A_t = exp(P ln t)`.
    pub fn evaluate(&self, t: f64) -> Result<Matrix> {
        self.evaluate_side(t, Side::Primal)
    }

    /// `A_t` from `u = ln t`, on either side.
    pub fn evaluate_log(&self, u: f64, side: Side) -> Result<Matrix> {
        expm(&(self.side_matrix(side) * u))
    }

    /// `rho(x)`: the unique `t > 0` with `<B A_{1/t} x, A_{1/t} x> = 1`, and `0` at the origin.
    pub fn quasi_norm(&self, x: &[f64], side: Side) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if x.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let x = DVector::from_column_slice(x);
        let p = self.side_matrix(side);
        let form = self.form(side);

        // g(u) = <B A_{e^-u} x, A_{e^-u} x> - 1, decreasing in u = ln t with
        // g'(u) = -|A_{e^-u} x|^2.
        let eval = |u: f64| -> Result<(f64, f64)> {
            let y = expm(&(&p * -u))? * &x;
            Ok((form.quadratic(&y) - 1.0, -y.norm_squared()))
        };

        let mut u = form.quadratic(&x).max(1e-300).ln();
        let (mut g, _) = eval(u)?;
        let mut dg;
        if g == 0.0 {
            return Ok(u.exp());
        }
        let (mut lo, mut hi);
        let mut step = std::f64::consts::LN_2;
        if g > 0.0 {
            lo = u;
            loop {
                let next = lo + step;
                let (gn, dn) = eval(next)?;
                if gn <= 0.0 {
                    hi = next;
                    (u, g, dg) = (next, gn, dn);
                    break;
                }
                lo = next;
                step *= 2.0;
                if !step.is_finite() {
                    return Err(Error::RootNotConverged);
                }
            }
        } else {
            hi = u;
            loop {
                let next = hi - step;
                let (gn, dn) = eval(next)?;
                if gn >= 0.0 {
                    lo = next;
                    (u, g, dg) = (next, gn, dn);
                    break;
                }
                hi = next;
                step *= 2.0;
                if !step.is_finite() {
                    return Err(Error::RootNotConverged);
                }
            }
        }

        for _ in 0..ROOT_MAX_ITER {
            if g == 0.0 {
                return Ok(u.exp());
            }
            let newton = u - g / dg;
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let moved = (next - u).abs();
            u = next;
            (g, dg) = eval(u)?;
            if g > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            if moved <= ROOT_REL_TOL || hi - lo <= ROOT_REL_TOL {
                return Ok(u.exp());
            }
        }
        Err(Error::RootNotConverged)
    }

    /// `max_{s,t} ||A_s A_t - A_{st}||` over the given pairs.
    pub fn group_law_residual(&self, pairs: &[(f64, f64)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &(s, t) in pairs {
            let lhs = self.evaluate(s)? * self.evaluate(t)?;
            let rhs = self.evaluate(s * t)?;
            worst = worst.max((lhs - rhs).norm());
        }
        Ok(worst)
    }
}

/// Matrix with positive spectrum sharing the Jordan structure of `A` at the
/// moduli: each generalized eigenspace of `A` for `lambda` is rescaled by `|lambda| / lambda`.
pub fn positive_counterpart(a: &Dilation) -> Result<Matrix> {
    let m = a.matrix();
    let n = a.dim();
    let tols = Tolerances::default();
    let clusters = eigen_clusters(m, tols.jordan_cluster)?;
    if clusters
        .iter()
        .all(|c| c.value.im == 0.0 && c.value.re > 0.0)
    {
        return Ok(m.clone());
    }

    let mut basis = CMatrix::zeros(n, n);
    let mut factors = Vec::with_capacity(n);
    let mut col = 0;
    for c in &clusters {
        let (v, _) = generalized_eigenspace(m, c.value, c.multiplicity, tols.rank)?;
        basis.columns_mut(col, v.ncols()).copy_from(&v);
        col += v.ncols();
        let factor = c.value.norm() / c.value;
        factors.extend(std::iter::repeat_n(factor, v.ncols()));
    }
    if col != n {
        return Err(Error::AmbiguousRank {
            detail: format!("generalized eigenspaces span {col} of {n} dimensions"),
        });
    }
    let inverse = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::AmbiguousRank {
            detail: "generalized eigenspaces are numerically dependent".into(),
        })?;
    let d = &basis * CMatrix::from_diagonal(&DVector::from_vec(factors)) * inverse;
    let b = crate::linalg::to_complex(m) * d;
    let imag = b.map(|z: Complex64| z.im).abs().max();
    let out = b.map(|z| z.re);
    if imag > 1e-8 * out.norm() {
        return Err(Error::AmbiguousRank {
            detail: format!("counterpart has imaginary part {imag:e}"),
        });
    }
    Ok(out)
}

/// Unique trace-one generator whose group contains `A`:
/// `P = X / tr X` with `X = log(positive_counterpart(A))`.
pub fn associated_generator(a: &Dilation) -> Result<Generator> {
    let x = logm_positive(&positive_counterpart(a)?)?;
    Generator::normalized(x)
}

/// Empirical lower bound for the quasi-triangle constant of the smooth quasi-norm.
///
/// Samples pairs with `y = 0`, `y = x` and independent Gaussian-free uniform
/// directions at log-uniform scales.
pub fn quasi_triangle_constant<R: Rng + ?Sized>(
    g: &ContinuousGroup,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let n = g.dim();
    let random_vec = |rng: &mut R| -> Vec<f64> {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        (0..n)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect()
    };
    let ratio = |x: &[f64], y: &[f64]| -> Result<f64> {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let denom = g.quasi_norm(x, Side::Primal)? + g.quasi_norm(y, Side::Primal)?;
        if denom == 0.0 {
            return Ok(1.0);
        }
        Ok(g.quasi_norm(&s, Side::Primal)? / denom)
    };
    let first = random_vec(rng);
    let mut best = ratio(&first, &vec![0.0; n])?.max(ratio(&first, &first)?);
    for _ in 1..samples {
        let x = random_vec(rng);
        let y = random_vec(rng);
        best = best.max(ratio(&x, &y)?);
        best = best.max(ratio(&x, &x)?);
    }
    Ok(best)
}
