use nalgebra::Schur;
use num_complex::Complex64;
use serde::Serialize;

use super::{check_square, Matrix};
use crate::error::{Error, Result};

/// One eigenvalue cluster with its algebraic multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Clustered spectrum of a real square matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub cluster_tolerance: f64,
}

impl Spectrum {
    /// Total algebraic multiplicity.
    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    pub fn min_modulus(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.value.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.value.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// All eigenvalues repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity))
            .collect()
    }
}

pub(crate) fn raw_eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    let n = check_square(m)?;
    let max_iter = 1000 * n;
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(Error::EigenNoConvergence {
            iterations: max_iter,
        })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Groups values by single linkage at absolute distance `radius`.
pub(crate) fn cluster(values: &[Complex64], radius: f64) -> Vec<Vec<Complex64>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(values[i]),
            None => groups.push((r, vec![values[i]])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Cluster means, with conjugate symmetry restored for real input.
pub(crate) fn cluster_means(values: &[Complex64], radius: f64) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = cluster(values, radius)
        .into_iter()
        .map(|g| {
            let sum: Complex64 = g.iter().sum();
            let mut mean = sum / g.len() as f64;
            if mean.im.abs() <= radius {
                mean.im = 0.0;
            }
            Eigenvalue {
                value: mean,
                multiplicity: g.len(),
            }
        })
        .collect();
    // Snap each upper-half-plane cluster's partner to its exact conjugate.
    let snapshot = out.clone();
    for e in out.iter_mut().filter(|e| e.value.im < 0.0) {
        if let Some(partner) = snapshot
            .iter()
            .filter(|p| p.value.im > 0.0 && p.multiplicity == e.multiplicity)
            .min_by(|a, b| {
                let da = (a.value.conj() - e.value).norm();
                let db = (b.value.conj() - e.value).norm();
                da.total_cmp(&db)
            })
        {
            e.value = partner.value.conj();
        }
    }
    out.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
    out
}

/// Eigenvalues of `m` with multiplicities, merged when `|a - b| <= tol * ||m||`.
pub fn eig(m: &Matrix, tol: f64) -> Result<Spectrum> {
    let raw = raw_eigenvalues(m)?;
    let scale = m.norm();
    Ok(Spectrum {
        eigenvalues: cluster_means(&raw, tol * scale),
        cluster_tolerance: tol,
    })
}

/// Eigenvalues grouped at the coarse radius `tol * ||M||_F`, as used for Jordan structure.
pub fn eigen_clusters(m: &Matrix, tol: f64) -> Result<Vec<Eigenvalue>> {
    let raw = raw_eigenvalues(m)?;
    Ok(cluster_means(&raw, tol * m.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn jordan_block_has_double_eigenvalue() {
        let s = eig(&from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]), 1e-9).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!(s.eigenvalues[0].multiplicity, 2);
        assert!((s.eigenvalues[0].value - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let s = eig(&from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]), 1e-9).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0].value - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((s.eigenvalues[1].value - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(s.eigenvalues[0].value, s.eigenvalues[1].value.conj());
    }

    #[test]
    fn triangular_reads_diagonal() {
        let s = eig(&from_rows(&[&[2.0, 5.0], &[0.0, 3.0]]), 1e-9).unwrap();
        let vals: Vec<f64> = s.eigenvalues.iter().map(|e| e.value.re).collect();
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(eig(&m, 1e-9), Err(Error::NotSquare { .. })));
    }
}
