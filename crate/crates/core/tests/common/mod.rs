#![allow(dead_code)]

use anidil_core::linalg::Matrix;
use proptest::prelude::*;

/// `S T S^{-1}` with `T` upper triangular. Diagonal from `diag`, strict upper
/// part and conjugator perturbation from `fill`.
pub fn conjugated_triangular(diag: &[f64], fill: &[f64]) -> Matrix {
    let n = diag.len();
    let mut t = Matrix::zeros(n, n);
    let mut s = Matrix::identity(n, n);
    let mut it = fill.iter().cycle();
    for i in 0..n {
        t[(i, i)] = diag[i];
        for j in 0..n {
            if j > i {
                t[(i, j)] = *it.next().unwrap();
            }
            s[(i, j)] += 0.3 * it.next().unwrap();
        }
    }
    let s_inv = s.clone().try_inverse().expect("conjugator is near the identity");
    &s * t * s_inv
}

/// Real matrix with a complex pair `a +- ib` in the leading 2x2 block.
pub fn with_complex_pair(a: f64, b: f64, rest: &[f64], fill: &[f64]) -> Matrix {
    let n = 2 + rest.len();
    let mut t = Matrix::zeros(n, n);
    t[(0, 0)] = a;
    t[(0, 1)] = b;
    t[(1, 0)] = -b;
    t[(1, 1)] = a;
    for (i, r) in rest.iter().enumerate() {
        t[(2 + i, 2 + i)] = *r;
    }
    let mut s = Matrix::identity(n, n);
    for (k, v) in fill.iter().cycle().take(n * n).enumerate() {
        s[(k / n, k % n)] += 0.3 * v;
    }
    let s_inv = s.clone().try_inverse().expect("conjugator is near the identity");
    &s * t * s_inv
}

pub fn fill(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

/// Expansive generator of dimension 2..=4 with real parts in `[0.2, 2]`.
pub fn generator() -> impl Strategy<Value = Matrix> {
    (2usize..=4).prop_flat_map(|n| {
        (prop::collection::vec(0.2f64..2.0, n), fill(2 * n * n)).prop_map(|(d, f)| conjugated_triangular(&d, &f))
    })
}

/// Expansive dilation of dimension 2..=3 with real eigenvalues from 1.3 up,
/// pairwise at least 0.1 apart.
pub fn dilation_matrix() -> impl Strategy<Value = Matrix> {
    (2usize..=3).prop_flat_map(|n| {
        (1.3f64..2.0, prop::collection::vec(0.1f64..0.8, n - 1), fill(2 * n * n)).prop_map(|(first, gaps, f)| {
            let mut d = vec![first];
            for g in gaps {
                d.push(d.last().unwrap() + g);
            }
            conjugated_triangular(&d, &f)
        })
    })
}

/// Random vector with entries in `[-scale, scale]`, avoiding the origin.
pub fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}
