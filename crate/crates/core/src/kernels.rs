//! Fourier multipliers of the parabolic heat kernel, the quasi-norm kernel and the
//! product Poisson kernel, and the spectral solver built on them.
//!
//! Transform convention: `f^(xi) = int f(x) exp(-2 pi i x.xi) dx`.

use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fourier, GridSpec, SampledField};
use crate::group::{ContinuousGroup, Side};
use crate::linalg::Matrix;

/// Kernel values above this on the Nyquist shell mean the grid under-resolves the kernel.
pub const NYQUIST_TOL: f64 = 1e-8;
/// Relative magnitude below which a sample counts as outside a support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Cap on boundary point pairs examined by the probe.
pub const MAX_DISTANCE_PAIRS: usize = 10_000;

const FOUR_PI2: f64 = 4.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `exp(-4 pi^2 <B* A_t^T xi, A_t^T xi>)`.
    #[serde(rename = "gaussian-B")]
    GaussianB,
    /// `exp(-4 pi^2 t^2 rho_*(xi)^2)`.
    Quasinorm,
    /// `prod_i exp(-2 pi t |xi_i|)`.
    ProductPoisson,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::GaussianB => "gaussian-B",
            KernelKind::Quasinorm => "quasinorm",
            KernelKind::ProductPoisson => "product-poisson",
        }
    }

    /// Kernel parameter realizing the semigroup time `tau`.
    pub fn semigroup_parameter(self, tau: f64) -> f64 {
        match self {
            KernelKind::Quasinorm => tau.sqrt(),
            _ => tau,
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-B" | "gaussian-b" => Ok(KernelKind::GaussianB),
            "quasinorm" => Ok(KernelKind::Quasinorm),
            "product-poisson" => Ok(KernelKind::ProductPoisson),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other}"))),
        }
    }
}

/// A kernel kind together with the group it is built from, if any.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    kind: KernelKind,
    group: Option<ContinuousGroup>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, group: Option<ContinuousGroup>) -> Result<Self> {
        match (kind, &group) {
            (KernelKind::GaussianB | KernelKind::Quasinorm, None) => Err(Error::KernelMismatch {
                kind: kind.name(),
                detail: "requires a continuous group".into(),
            }),
            _ => Ok(Self { kind, group }),
        }
    }

    pub fn gaussian_b(group: ContinuousGroup) -> Self {
        Self {
            kind: KernelKind::GaussianB,
            group: Some(group),
        }
    }

    pub fn quasinorm(group: ContinuousGroup) -> Self {
        Self {
            kind: KernelKind::Quasinorm,
            group: Some(group),
        }
    }

    pub fn product_poisson() -> Self {
        Self {
            kind: KernelKind::ProductPoisson,
            group: None,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn group(&self) -> Option<&ContinuousGroup> {
        self.group.as_ref()
    }

    fn require_group(&self) -> Result<&ContinuousGroup> {
        self.group.as_ref().ok_or_else(|| Error::KernelMismatch {
            kind: self.kind.name(),
            detail: "requires a continuous group".into(),
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if let Some(g) = &self.group {
            if g.dim() != n {
                return Err(Error::KernelMismatch {
                    kind: self.kind.name(),
                    detail: format!("group dimension {} vs frequency dimension {n}", g.dim()),
                });
            }
        }
        Ok(())
    }

    /// `A_t B* A_t^T`, so that the Gaussian exponent is `xi^T M xi`.
    fn gaussian_form(&self, t: f64) -> Result<Matrix> {
        let g = self.require_group()?;
        let a = g.evaluate(t)?;
        Ok(&a * g.form(Side::Dual).matrix() * a.transpose())
    }

    /// Fourier multiplier at frequency `xi` and scale `t`.
    pub fn kernel_hat(&self, xi: &[f64], t: f64) -> Result<f64> {
        check_t(t)?;
        self.check_dim(xi.len())?;
        match self.kind {
            KernelKind::GaussianB => {
                let m = self.gaussian_form(t)?;
                let v = nalgebra::DVector::from_column_slice(xi);
                Ok((-FOUR_PI2 * v.dot(&(m * &v))).exp())
            }
            KernelKind::Quasinorm => {
                let r = self.require_group()?.quasi_norm(xi, Side::Dual)?;
                Ok((-FOUR_PI2 * t * t * r * r).exp())
            }
            KernelKind::ProductPoisson => {
                Ok((-2.0 * PI * t * xi.iter().map(|x| x.abs()).sum::<f64>()).exp())
            }
        }
    }

    /// Dual quasi-norm at every frequency of `spec`, in FFT order.
    pub fn dual_norm_grid(&self, spec: &GridSpec) -> Result<Vec<f64>> {
        let g = self.require_group()?;
        self.check_dim(spec.n)?;
        (0..spec.len())
            .into_par_iter()
            .map(|i| g.quasi_norm(&spec.frequency(i), Side::Dual))
            .collect()
    }

    /// Multiplier on every frequency of `spec`, in FFT order.
    pub fn kernel_grid(&self, spec: &GridSpec, t: f64) -> Result<Vec<f64>> {
        check_t(t)?;
        self.check_dim(spec.n)?;
        match self.kind {
            KernelKind::GaussianB => {
                let m = self.gaussian_form(t)?;
                Ok((0..spec.len())
                    .into_par_iter()
                    .map(|i| {
                        let v = nalgebra::DVector::from_vec(spec.frequency(i));
                        (-FOUR_PI2 * v.dot(&(&m * &v))).exp()
                    })
                    .collect())
            }
            KernelKind::Quasinorm => {
                let rho = self.dual_norm_grid(spec)?;
                Ok(quasinorm_from_norms(&rho, t))
            }
            KernelKind::ProductPoisson => Ok((0..spec.len())
                .into_par_iter()
                .map(|i| {
                    let s: f64 = spec.frequency(i).iter().map(|x| x.abs()).sum();
                    (-2.0 * PI * t * s).exp()
                })
                .collect()),
        }
    }
}

fn quasinorm_from_norms(rho: &[f64], t: f64) -> Vec<f64> {
    rho.iter()
        .map(|r| (-FOUR_PI2 * t * t * r * r).exp())
        .collect()
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t = {t} must be > 0")));
    }
    Ok(())
}

/// Largest multiplier value on the Nyquist shell of `spec`.
pub fn nyquist_level(k: &KernelSpec, spec: &GridSpec, t: f64) -> Result<f64> {
    let grid = k.kernel_grid(spec, t)?;
    Ok(grid
        .iter()
        .enumerate()
        .filter(|(i, _)| spec.is_nyquist(*i))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max))
}

/// `f * Phi_t` computed as `IFFT(kernel_hat(., t) FFT(f))`.
pub fn evolve(k: &KernelSpec, f: &SampledField, t: f64) -> Result<SampledField> {
    let multiplier = k.kernel_grid(&f.spec, t)?;
    Ok(apply(f, &multiplier).with_meta(serde_json::json!({
        "kernel": k.kind().name(),
        "t": t,
    })))
}

/// Applies a multiplier given in FFT order.
pub fn apply(f: &SampledField, multiplier: &[f64]) -> SampledField {
    let fourier = Fourier::new(f.spec);
    let mut spectrum = f.values.clone();
    fourier.forward(&mut spectrum);
    SampledField {
        spec: f.spec,
        values: fourier.apply_multiplier(&spectrum, multiplier),
        meta: None,
    }
}

/// Scaled max deviation of a central difference in `t` of `kernel_hat(xi, t)`
/// from `-4 pi^2 |A_t^T xi|^2 / t * kernel_hat(xi, t)`.
///
/// The step is `1e-5 t`; the deviation is divided by `max(1, max |RHS|)`.
pub fn pde_residual(k: &KernelSpec, t: f64, xis: &[Vec<f64>]) -> Result<f64> {
    check_t(t)?;
    let g = k.require_group()?;
    let h = 1e-5 * t;
    let at_t = g.evaluate_side(t, Side::Dual)?;
    let rows: Vec<Result<(f64, f64)>> = xis
        .par_iter()
        .map(|xi| {
            let plus = k.kernel_hat(xi, t + h)?;
            let minus = k.kernel_hat(xi, t - h)?;
            let center = k.kernel_hat(xi, t)?;
            let eta = &at_t * nalgebra::DVector::from_column_slice(xi);
            let rhs = -FOUR_PI2 * eta.norm_squared() / t * center;
            Ok(((plus - minus) / (2.0 * h) - rhs, rhs))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for r in rows {
        let (diff, rhs) = r?;
        worst = worst.max(diff.abs());
        scale = scale.max(rhs.abs());
    }
    Ok(worst / scale)
}

/// `max_xi |h_s h_t - h_{s+t}|` on the frequencies of `spec`, where `h_tau` is
/// the multiplier at the kernel parameter realizing semigroup time `tau`
/// (`sqrt(tau)` for the quasi-norm kernel, `tau` otherwise).
pub fn semigroup_defect(k: &KernelSpec, s: f64, t: f64, spec: &GridSpec) -> Result<f64> {
    check_t(s)?;
    check_t(t)?;
    let kind = k.kind();
    let (hs, ht, hst) = if kind == KernelKind::Quasinorm {
        let rho = k.dual_norm_grid(spec)?;
        (
            quasinorm_from_norms(&rho, kind.semigroup_parameter(s)),
            quasinorm_from_norms(&rho, kind.semigroup_parameter(t)),
            quasinorm_from_norms(&rho, kind.semigroup_parameter(s + t)),
        )
    } else {
        (
            k.kernel_grid(spec, kind.semigroup_parameter(s))?,
            k.kernel_grid(spec, kind.semigroup_parameter(t))?,
            k.kernel_grid(spec, kind.semigroup_parameter(s + t))?,
        )
    };
    Ok(hs
        .iter()
        .zip(&ht)
        .zip(&hst)
        .map(|((a, b), c)| (a * b - c).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub t: f64,
    pub pairing: f64,
    pub dist: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeFit {
    /// Fitted `c` in `|<T_t f1, f2>| ~ C exp(-dist^2 / (c t))`; `None` if the slope is not positive.
    pub c: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Off-diagonal decay data for the semigroup pairing of two disjointly supported fields.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub kernel: KernelKind,
    pub rows: Vec<ProbeRow>,
    pub dist: f64,
    pub adjacent: bool,
    pub pairs_examined: usize,
    pub fit: Option<ProbeFit>,
    pub note: Option<String>,
}

fn support(f: &SampledField) -> Vec<bool> {
    let cut = SUPPORT_TOL * f.max_abs();
    f.values.iter().map(|v| v.norm() > cut).collect()
}

fn boundary(spec: &GridSpec, mask: &[bool]) -> Vec<usize> {
    (0..spec.len())
        .filter(|&i| {
            mask[i] && {
                let idx = spec.unravel(i);
                (0..spec.n).any(|a| {
                    [1, spec.size - 1].iter().any(|&step| {
                        let mut j = idx;
                        j[a] = (j[a] + step) % spec.size;
                        !mask[spec.ravel(&j)]
                    })
                })
            }
        })
        .collect()
}

fn subsample(points: Vec<usize>, cap: usize) -> Vec<usize> {
    if points.len() <= cap {
        return points;
    }
    let stride = points.len().div_ceil(cap);
    points.into_iter().step_by(stride).collect()
}

/// Pairs `|<T_t f1, f2>|` with the quasi-norm distance between the supports
/// and fits `ln |pairing|` against `-dist^2 / t`. Emits data only.
pub fn davies_gaffney_probe(
    k: &KernelSpec,
    f1: &SampledField,
    f2: &SampledField,
    t_grid: &[f64],
) -> Result<ProbeReport> {
    f1.check_same_grid(f2)?;
    let spec = f1.spec;
    let m1 = support(f1);
    let m2 = support(f2);
    let overlap = m1.iter().zip(&m2).filter(|(a, b)| **a && **b).count();
    if overlap > 0 {
        return Err(Error::OverlappingSupports { count: overlap });
    }

    let cap = (MAX_DISTANCE_PAIRS as f64).sqrt() as usize;
    let b1 = subsample(boundary(&spec, &m1), cap);
    let b2 = subsample(boundary(&spec, &m2), cap);
    let half = (spec.size / 2) as i64;
    let h = spec.spacing();
    let mut adjacent = false;
    let mut displacements = Vec::with_capacity(b1.len() * b2.len());
    for &i in &b1 {
        let a = spec.unravel(i);
        for &j in &b2 {
            let b = spec.unravel(j);
            let d: Vec<i64> = (0..spec.n)
                .map(|ax| (a[ax] as i64 - b[ax] as i64 + half).rem_euclid(spec.size as i64) - half)
                .collect();
            if d.iter().all(|x| x.abs() <= 1) {
                adjacent = true;
            }
            displacements.push(d.iter().map(|x| *x as f64 * h).collect::<Vec<f64>>());
        }
    }
    let dist = if adjacent {
        0.0
    } else {
        let norms: Vec<f64> = displacements
            .par_iter()
            .map(|d| match k.group() {
                Some(g) => g.quasi_norm(d, Side::Primal),
                None => Ok(d.iter().map(|x| x * x).sum::<f64>().sqrt()),
            })
            .collect::<Result<_>>()?;
        norms.into_iter().fold(f64::INFINITY, f64::min)
    };

    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let evolved = evolve(k, f1, k.kind().semigroup_parameter(t))?;
        rows.push(ProbeRow {
            t,
            pairing: evolved.inner(f2)?.norm(),
            dist,
        });
    }

    let (fit, note) = if adjacent || dist == 0.0 {
        (
            None,
            Some("supports touch: distance is zero, fit skipped".to_string()),
        )
    } else {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.pairing > 0.0)
            .map(|r| (-dist * dist / r.t, r.pairing.ln()))
            .collect();
        if pts.len() < 2 {
            (None, Some("fewer than two positive pairings".to_string()))
        } else {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx == 0.0 {
                (None, Some("degenerate t-grid".to_string()))
            } else {
                let slope = sxy / sxx;
                let r_squared = if syy > 0.0 {
                    sxy * sxy / (sxx * syy)
                } else {
                    0.0
                };
                (
                    Some(ProbeFit {
                        c: (slope > 0.0).then(|| 1.0 / slope),
                        slope,
                        intercept: my - slope * mx,
                        r_squared,
                    }),
                    None,
                )
            }
        }
    };

    Ok(ProbeReport {
        kernel: k.kind(),
        rows,
        dist,
        adjacent,
        pairs_examined: b1.len() * b2.len(),
        fit,
        note,
    })
}
