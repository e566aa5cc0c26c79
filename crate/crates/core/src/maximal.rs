//! Radial and non-tangential maximal functions on periodic grids, `L^p`
//! quasi-norms and weighted Schwartz seminorms.
//!
//! Every convolution is spectral: dilates of the test function are formed
//! analytically in frequency. Cones use minimum-image displacements on the torus.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansive::{step_quasi_norm, Dilation, EllipsoidFamily};
use crate::grid::{Fourier, GridSpec, SampledField};
use crate::group::{ContinuousGroup, Side};
use crate::linalg::{check_square, matrix_power, norm2, symmetrize, Matrix};

/// Relative level at which a test function counts as negligible.
pub const TEST_FUNCTION_CUTOFF: f64 = 1e-8;
/// Required decay of a sampled test function at the box boundary, relative to its peak.
pub const BOUNDARY_DECAY: f64 = 1e-10;
/// Spectral derivatives need the weighted spectrum at the Nyquist shell below this fraction.
pub const DERIVATIVE_RESOLUTION: f64 = 1e-8;

/// Gaussian test function `phi(x) = det(S)^{-1/2} exp(-pi x^T S^{-1} x)` with
/// `phi^(xi) = exp(-pi xi^T S xi)` and `int phi = 1`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    shape: Matrix,
    shape_inv: Matrix,
    det: f64,
}

impl TestFunction {
    pub fn gaussian(shape: Matrix) -> Result<Self> {
        check_square(&shape)?;
        let asymmetry = (&shape - shape.transpose()).abs().max();
        if asymmetry > 1e-12 * shape.abs().max() {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let shape = symmetrize(&shape);
        let det = shape.determinant();
        let chol = shape
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("test function shape must be positive definite".into()))?;
        Ok(Self {
            shape_inv: chol.inverse(),
            shape,
            det,
        })
    }

    /// `S = width^2 I`.
    pub fn isotropic(n: usize, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("width {width} must be > 0")));
        }
        Self::gaussian(Matrix::identity(n, n) * (width * width))
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }

    pub fn shape(&self) -> &Matrix {
        &self.shape
    }

    pub fn integral(&self) -> f64 {
        1.0
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        (-PI * v.dot(&(&self.shape_inv * &v))).exp() / self.det.sqrt()
    }

    pub fn hat(&self, xi: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(xi);
        (-PI * v.dot(&(&self.shape * &v))).exp()
    }

    /// Radius beyond which `phi` is below `TEST_FUNCTION_CUTOFF` of its peak.
    pub fn radius(&self) -> f64 {
        let widest = self.shape.symmetric_eigenvalues().max();
        (widest * (1.0 / TEST_FUNCTION_CUTOFF).ln() / PI).sqrt()
    }

    /// Samples `phi`, checking that it has decayed at the box boundary.
    pub fn sample(&self, spec: &GridSpec) -> Result<SampledField> {
        if spec.n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: spec.n,
            });
        }
        let field = SampledField::from_fn(*spec, |x| Complex64::new(self.value(x), 0.0))?;
        let peak = 1.0 / self.det.sqrt();
        let edge = (0..spec.len())
            .filter(|&i| spec.unravel(i)[..spec.n].contains(&0))
            .map(|i| field.values[i].re)
            .fold(0.0, f64::max);
        if edge > BOUNDARY_DECAY * peak {
            return Err(Error::InvalidGrid(format!(
                "test function is {:e} of its peak at the box boundary",
                edge / peak
            )));
        }
        Ok(field)
    }

    /// Multiplier of `x -> det(M)^{-1} phi(M^{-1} x)` on `spec`: `phi^(M^T xi)`.
    fn dilated_multiplier(&self, spec: &GridSpec, m: &Matrix) -> Vec<f64> {
        let s = m * &self.shape * m.transpose();
        (0..spec.len())
            .into_par_iter()
            .map(|i| {
                let v = nalgebra::DVector::from_vec(spec.frequency(i));
                (-PI * v.dot(&(&s * &v))).exp()
            })
            .collect()
    }
}

/// Scales and cone aperture for the maximal operators.
#[derive(Debug, Clone, Serialize)]
pub struct ConeParams {
    pub k_min: i32,
    pub k_max: i32,
    pub t_grid: Vec<f64>,
    /// Cone `{rho(x - y) < aperture * scale}`; 0 collapses the cone to `{y = x}`.
    pub aperture: f64,
    /// Also evaluate on a t-grid of doubled density and report the relative change.
    pub refine: bool,
}

impl ConeParams {
    pub fn discrete(k_min: i32, k_max: i32) -> Self {
        Self {
            k_min,
            k_max,
            t_grid: Vec::new(),
            aperture: 1.0,
            refine: false,
        }
    }

    pub fn parabolic(t_grid: Vec<f64>) -> Self {
        Self {
            k_min: 0,
            k_max: -1,
            t_grid,
            aperture: 1.0,
            refine: false,
        }
    }

    /// `count` log-spaced values from `t_min` to `t_max`.
    pub fn log_spaced(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
        if count <= 1 {
            return vec![t_min];
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect()
    }

    /// Discrete range `[k_min, k_max]` together with the matching t-grid `t0^k`.
    pub fn matched(t0: f64, k_min: i32, k_max: i32) -> Self {
        Self {
            k_min,
            k_max,
            t_grid: (k_min..=k_max).map(|k| t0.powi(k)).collect(),
            aperture: 1.0,
            refine: false,
        }
    }

    pub fn with_aperture(mut self, aperture: f64) -> Self {
        self.aperture = aperture;
        self
    }

    pub fn with_refinement(mut self) -> Self {
        self.refine = true;
        self
    }

    fn check_discrete(&self) -> Result<()> {
        if self.k_min > self.k_max {
            return Err(Error::InvalidParameter(format!(
                "empty k-range [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        self.check_aperture()
    }

    fn check_parabolic(&self) -> Result<()> {
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("t-grid must be non-empty and positive".into()));
        }
        self.check_aperture()
    }

    fn check_aperture(&self) -> Result<()> {
        if !(self.aperture >= 0.0) || !self.aperture.is_finite() {
            return Err(Error::InvalidParameter(format!("aperture {}", self.aperture)));
        }
        Ok(())
    }
}

/// Peak of `|f * phi_scale|` at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct LevelInfo {
    pub scale: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone)]
pub struct MaximalOutput {
    pub field: SampledField,
    /// One entry per scale, in the order evaluated; the ends show the truncation tail.
    pub levels: Vec<LevelInfo>,
    /// `max |M_refined - M| / max |M_refined|` when refinement was requested.
    pub refinement: Option<f64>,
}

fn check_field(f: &SampledField, phi: &TestFunction, n: usize) -> Result<()> {
    if f.spec.n != phi.dim() || f.spec.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.spec.n,
        });
    }
    Ok(())
}

fn check_width(m: &Matrix, phi: &TestFunction, spec: &GridSpec, scale: f64) -> Result<()> {
    let width = 2.0 * norm2(m) * phi.radius();
    if width > spec.length {
        return Err(Error::Truncation {
            scale,
            width,
            side: spec.length,
        });
    }
    Ok(())
}

fn magnitude(fourier: &Fourier, spectrum: &[Complex64], multiplier: &[f64]) -> Vec<f64> {
    fourier
        .apply_multiplier(spectrum, multiplier)
        .iter()
        .map(|v| v.norm())
        .collect()
}

fn to_field(spec: GridSpec, values: Vec<f64>, meta: serde_json::Value) -> SampledField {
    SampledField {
        spec,
        values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        meta: Some(meta),
    }
}

fn max_into(acc: &mut [f64], other: &[f64]) {
    acc.par_iter_mut().zip(other.par_iter()).for_each(|(a, b)| {
        if *b > *a {
            *a = *b
        }
    });
}

/// `max_{i <= m <= i + w - 1}` over a periodic line starting at offset `lo`.
fn window_max(line: &[f64], lo: i64, hi: i64, out: &mut [f64]) {
    let n = line.len() as i64;
    let w = hi - lo + 1;
    if w >= n {
        let m = line.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.iter_mut().for_each(|o| *o = o.max(m));
        return;
    }
    let at = |j: i64| line[(j + lo).rem_euclid(n) as usize];
    let mut deque: VecDeque<i64> = VecDeque::new();
    for j in 0..(n + w - 1) {
        let v = at(j);
        while deque.back().is_some_and(|&b| at(b) <= v) {
            deque.pop_back();
        }
        deque.push_back(j);
        let start = j - w + 1;
        if start >= 0 {
            while deque.front().is_some_and(|&f| f < start) {
                deque.pop_front();
            }
            let m = at(*deque.front().unwrap());
            let o = &mut out[start as usize];
            if m > *o {
                *o = m;
            }
        }
    }
}

/// `out(x) = max { g(x + d) : d^T Q d < level }` (`<=` unless `strict`), with
/// minimum-image displacements `d` on the grid.
pub fn cone_max(g: &[f64], spec: &GridSpec, q: &Matrix, level: f64, strict: bool) -> Vec<f64> {
    if level <= 0.0 {
        return g.to_vec();
    }
    let n = spec.n;
    let size = spec.size;
    let h = spec.spacing();
    let half = (size / 2) as i64;
    let last = n - 1;
    let q_inv = q.clone().try_inverse().expect("cone form is positive definite");
    let q_ll = q[(last, last)];

    // Prefix offsets over the first n - 1 axes with their last-axis intervals.
    let extents: Vec<i64> = (0..last)
        .map(|a| ((level * q_inv[(a, a)]).sqrt() / h).floor().min(half as f64) as i64)
        .collect();
    let mut prefixes: Vec<(Vec<usize>, i64, i64)> = Vec::new();
    let mut offset: Vec<i64> = extents.iter().map(|e| -(*e).min(half)).collect();
    loop {
        let p: Vec<f64> = offset.iter().map(|m| *m as f64 * h).collect();
        let mut beta = 0.0;
        let mut gamma = 0.0;
        for a in 0..last {
            beta += q[(a, last)] * p[a];
            for b in 0..last {
                gamma += p[a] * q[(a, b)] * p[b];
            }
        }
        let disc = beta * beta - q_ll * (gamma - level);
        if disc > 0.0 || (!strict && disc == 0.0) {
            let root = disc.sqrt();
            let s1 = (-beta - root) / q_ll / h;
            let s2 = (-beta + root) / q_ll / h;
            let (lo, hi) = if strict {
                (s1.floor() as i64 + 1, s2.ceil() as i64 - 1)
            } else {
                (s1.ceil() as i64, s2.floor() as i64)
            };
            let (lo, hi) = (lo.max(-half), hi.min(half - 1));
            if lo <= hi {
                let rows: Vec<usize> = offset
                    .iter()
                    .map(|m| m.rem_euclid(size as i64) as usize)
                    .collect();
                prefixes.push((rows, lo, hi));
            }
        }
        // Advance the odometer.
        let mut axis = last;
        loop {
            if axis == 0 {
                return apply_prefixes(g, spec, &prefixes);
            }
            axis -= 1;
            let upper = extents[axis].min(half - 1);
            if offset[axis] < upper {
                offset[axis] += 1;
                break;
            }
            offset[axis] = -extents[axis].min(half);
        }
    }
}

fn apply_prefixes(g: &[f64], spec: &GridSpec, prefixes: &[(Vec<usize>, i64, i64)]) -> Vec<f64> {
    let size = spec.size;
    let mut out = vec![f64::NEG_INFINITY; g.len()];
    out.par_chunks_mut(size).enumerate().for_each(|(row, out_row)| {
        // row = multi-index over the first n - 1 axes
        let mut idx = [0usize; 3];
        let mut r = row;
        for a in (0..spec.n - 1).rev() {
            idx[a] = r % size;
            r /= size;
        }
        for (shift, lo, hi) in prefixes {
            let mut src = 0usize;
            for a in 0..spec.n - 1 {
                src = src * size + (idx[a] + shift[a]) % size;
            }
            window_max(&g[src * size..(src + 1) * size], *lo, *hi, out_row);
        }
    });
    out
}

/// `M^0 f(x) = max_{k_min <= k <= k_max} |f * phi_k(x)|` with
/// `phi_k(x) = b^{-k} phi(A^{-k} x)`.
pub fn radial_maximal_discrete(
    f: &SampledField,
    phi: &TestFunction,
    a: &Dilation,
    cone: &ConeParams,
) -> Result<MaximalOutput> {
    discrete_impl(f, phi, a, None, cone)
}

/// `max_k max_{rho_A(x - y) < b^k} |f * phi_k(y)|`; the cone at scale `k` is the
/// ellipsoid `aperture * B_k`.
pub fn nontangential_maximal_discrete(
    f: &SampledField,
    phi: &TestFunction,
    family: &EllipsoidFamily,
    cone: &ConeParams,
) -> Result<MaximalOutput> {
    discrete_impl(f, phi, family.dilation(), Some(family), cone)
}

fn discrete_impl(
    f: &SampledField,
    phi: &TestFunction,
    a: &Dilation,
    family: Option<&EllipsoidFamily>,
    cone: &ConeParams,
) -> Result<MaximalOutput> {
    cone.check_discrete()?;
    check_field(f, phi, a.dim())?;
    let spec = f.spec;
    let fourier = Fourier::new(spec);
    let mut spectrum = f.values.clone();
    fourier.forward(&mut spectrum);

    let mut acc = vec![0.0; spec.len()];
    let mut levels = Vec::new();
    for k in cone.k_min..=cone.k_max {
        let ak = matrix_power(a.matrix(), k as i64)?;
        let scale = a.b().powi(k);
        check_width(&ak, phi, &spec, scale)?;
        let conv = magnitude(&fourier, &spectrum, &phi.dilated_multiplier(&spec, &ak));
        levels.push(LevelInfo {
            scale,
            max_value: conv.iter().copied().fold(0.0, f64::max),
        });
        let level_max = match family {
            Some(fam) => cone_max(
                &conv,
                &spec,
                &fam.q_level(k as i64),
                cone.aperture * cone.aperture,
                false,
            ),
            None => conv,
        };
        max_into(&mut acc, &level_max);
    }
    let kind = if family.is_some() { "nontangential-discrete" } else { "radial-discrete" };
    let meta = serde_json::json!({
        "maximal": kind,
        "test_function": "gaussian",
        "cone": cone,
    });
    Ok(MaximalOutput {
        field: to_field(spec, acc, meta),
        levels,
        refinement: None,
    })
}

fn parabolic_pass(
    spectrum: &[Complex64],
    fourier: &Fourier,
    phi: &TestFunction,
    g: &ContinuousGroup,
    t_grid: &[f64],
    aperture: f64,
) -> Result<(Vec<f64>, Vec<LevelInfo>)> {
    let spec = *fourier.spec();
    let b = g.form(Side::Primal).matrix();
    let mut acc = vec![0.0; spec.len()];
    let mut levels = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let at = g.evaluate(t)?;
        check_width(&at, phi, &spec, t)?;
        let conv = magnitude(fourier, spectrum, &phi.dilated_multiplier(&spec, &at));
        levels.push(LevelInfo {
            scale: t,
            max_value: conv.iter().copied().fold(0.0, f64::max),
        });
        let level_max = if aperture == 0.0 {
            conv
        } else {
            let inv = g.evaluate(1.0 / (aperture * t))?;
            let q = symmetrize(&(inv.transpose() * b * inv));
            cone_max(&conv, &spec, &q, 1.0, true)
        };
        max_into(&mut acc, &level_max);
    }
    Ok((acc, levels))
}

/// `M~ f(x) = max_{t in grid} max_{rho~(x - y) < t} |f * phi~_t(y)|` with
/// `phi~_t(y) = t^{-1} phi(A_t^{-1} y)`.
pub fn nontangential_maximal_parabolic(
    f: &SampledField,
    phi: &TestFunction,
    g: &ContinuousGroup,
    cone: &ConeParams,
) -> Result<MaximalOutput> {
    cone.check_parabolic()?;
    check_field(f, phi, g.dim())?;
    let spec = f.spec;
    let fourier = Fourier::new(spec);
    let mut spectrum = f.values.clone();
    fourier.forward(&mut spectrum);
    let (acc, levels) = parabolic_pass(&spectrum, &fourier, phi, g, &cone.t_grid, cone.aperture)?;

    let refinement = if cone.refine && cone.t_grid.len() > 1 {
        let mut sorted = cone.t_grid.clone();
        sorted.sort_by(f64::total_cmp);
        let midpoints: Vec<f64> = sorted.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let (extra, _) = parabolic_pass(&spectrum, &fourier, phi, g, &midpoints, cone.aperture)?;
        let mut fine = acc.clone();
        max_into(&mut fine, &extra);
        let top = fine.iter().copied().fold(0.0, f64::max);
        let change = fine
            .iter()
            .zip(&acc)
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        Some(if top > 0.0 { change / top } else { 0.0 })
    } else {
        None
    };

    let meta = serde_json::json!({
        "maximal": "nontangential-parabolic",
        "test_function": "gaussian",
        "cone": cone,
    });
    Ok(MaximalOutput {
        field: to_field(spec, acc, meta),
        levels,
        refinement,
    })
}

/// `(sum |g|^p * cell volume)^{1/p}`.
pub fn lp_quasinorm(g: &SampledField, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must be in (0, inf)")));
    }
    let sum: f64 = g.values.iter().map(|v| v.norm().powf(p)).sum();
    Ok((sum * g.spec.cell_volume()).powf(1.0 / p))
}

/// Weight in a Schwartz seminorm.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    /// `(1 + |x|)^N`.
    Euclidean,
    /// `rho_A(x)^N` for the step quasi-norm of a dilation.
    Step(&'a EllipsoidFamily),
}

/// `max_x |d^alpha phi(x)| w(x)^N`, derivatives taken spectrally.
pub fn schwartz_seminorm(phi: &SampledField, alpha: &[usize], big_n: u32, weight: Weight) -> Result<f64> {
    let spec = phi.spec;
    if alpha.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            found: alpha.len(),
        });
    }
    let order: usize = alpha.iter().sum();
    let derivative = if order == 0 {
        phi.values.clone()
    } else {
        let fourier = Fourier::new(spec);
        let mut data = phi.values.clone();
        fourier.forward(&mut data);
        for (i, v) in data.iter_mut().enumerate() {
            let xi = spec.frequency(i);
            let mut m = Complex64::new(1.0, 0.0);
            for (a, &k) in alpha.iter().enumerate() {
                m *= Complex64::new(0.0, 2.0 * PI * xi[a]).powu(k as u32);
            }
            *v *= m;
        }
        let top = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let edge = data
            .iter()
            .enumerate()
            .filter(|(i, _)| spec.is_nyquist(*i))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if edge > DERIVATIVE_RESOLUTION * top {
            return Err(Error::DerivativeUnresolved { order });
        }
        fourier.inverse(&mut data);
        data
    };
    let mut best = 0.0f64;
    for (i, v) in derivative.iter().enumerate() {
        let x = spec.point(i);
        let w = match weight {
            Weight::Euclidean => (1.0 + x.iter().map(|c| c * c).sum::<f64>().sqrt()).powi(big_n as i32),
            Weight::Step(family) => {
                if big_n == 0 {
                    1.0
                } else {
                    step_quasi_norm(family, &x).powi(big_n as i32)
                }
            }
        };
        best = best.max(v.norm() * w);
    }
    Ok(best)
}
