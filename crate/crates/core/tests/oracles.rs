//! Closed forms and independent computations checked against the library.

mod common;

use std::f64::consts::PI;

use anidil_core::equivalence::{partition_count, partitions};
use anidil_core::grid::{GridSpec, SampledField};
use anidil_core::group::{ContinuousGroup, Generator, Side};
use anidil_core::kernels::{evolve, pde_residual, KernelSpec};
use anidil_core::linalg::{diag, expm, lyapunov_quadrature, lyapunov_residual, norm2, solve_lyapunov, Matrix};
use anidil_core::maximal::{schwartz_seminorm, TestFunction, Weight};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_generator(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let reals: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    let fill: Vec<f64> = (0..2 * n * n).map(|_| rng.sample::<f64, _>(StandardNormal).clamp(-1.0, 1.0)).collect();
    common::conjugated_triangular(&reals, &fill)
}

#[test]
fn lyapunov_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 3, 4] {
        for _ in 0..4 {
            let p = random_generator(&mut rng, n);
            let b = solve_lyapunov(&p).unwrap();
            assert!(norm2(&lyapunov_residual(&b, &p)) < 1e-12 * norm2(&b).max(1.0));
            let q = lyapunov_quadrature(&p, 1e-11).unwrap();
            assert!(norm2(&(&q - &b)) <= 1e-7 * norm2(&b), "{p}");
        }
    }
}

#[test]
fn expm_matches_taylor_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x = Matrix::from_fn(3, 3, |_, _| rng.random_range(-0.5..0.5));
        let mut term = Matrix::identity(3, 3);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &x / k as f64;
            sum += &term;
        }
        assert!(norm2(&(expm(&x).unwrap() - sum)) < 1e-14);
    }
}

#[test]
fn diagonal_quasi_norm_matches_bisection() {
    // P = diag(p1, p2) gives B = diag(1 / (2 p_i)) and the level-set equation
    // sum x_i^2 r^(-2 p_i) / (2 p_i) = 1 in r.
    let ps = [0.3, 0.7];
    let g = ContinuousGroup::new(Generator::new(diag(&ps)).unwrap()).unwrap();
    for x in [[1.0, 0.0], [0.3, -2.0], [5.0, 4.0], [1e-3, 2e-3]] {
        let level = |r: f64| -> f64 {
            ps.iter()
                .zip(&x)
                .map(|(p, xi)| xi * xi * r.powf(-2.0 * p) / (2.0 * p))
                .sum()
        };
        let (mut lo, mut hi) = (1e-12f64, 1e12f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if level(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rho = g.quasi_norm(&x, Side::Primal).unwrap();
        assert!((rho - lo).abs() <= 1e-10 * lo, "{x:?}: {rho} vs {lo}");
    }
}

#[test]
fn heat_kernel_closed_form() {
    let g = ContinuousGroup::new(Generator::new(diag(&[0.5, 0.5])).unwrap()).unwrap();
    let k = KernelSpec::gaussian_b(g);
    let spec = GridSpec::new(2, 128, 16.0).unwrap();
    let f = SampledField::from_fn(spec, |x| Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap();
    for t in [0.05, 0.2, 0.5] {
        let out = evolve(&k, &f, t).unwrap();
        let s = 1.0 + 4.0 * PI * t;
        for (i, v) in out.values.iter().enumerate() {
            let x = spec.point(i);
            let want = (-PI * (x[0] * x[0] + x[1] * x[1]) / s).exp() / s;
            assert!((v - want).norm() < 1e-10);
        }
    }
    let xis = GridSpec::new(2, 64, 16.0).unwrap().frequencies();
    assert!(pde_residual(&k, 1.0, &xis).unwrap() < 1e-6);
}

#[test]
fn partition_counts_match_table() {
    let table = [1u64, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627];
    for (n, &want) in table.iter().enumerate().skip(1) {
        assert_eq!(partition_count(n).unwrap(), want);
        if n <= 12 {
            assert_eq!(partitions(n).unwrap().len() as u64, want);
        }
    }
    assert_eq!(partition_count(40).unwrap(), 37338);
}

#[test]
fn gaussian_seminorms_match_calculus() {
    // phi(x) = exp(-pi |x|^2) in 2D; sup (1 + |x|) phi(x) is attained where
    // 1 = 2 pi r (1 + r).
    let spec = GridSpec::new(2, 256, 16.0).unwrap();
    let phi = TestFunction::isotropic(2, 1.0).unwrap().sample(&spec).unwrap();
    let r = (-1.0 + (1.0f64 + 2.0 / PI).sqrt()) / 2.0;
    let want = (1.0 + r) * (-PI * r * r).exp();
    let got = schwartz_seminorm(&phi, &[0, 0], 1, Weight::Euclidean).unwrap();
    // grid sampling of the maximizer
    assert!((got - want).abs() < 5e-3, "{got} vs {want}");
    // second derivative at the origin: -2 pi
    let d2 = schwartz_seminorm(&phi, &[2, 0], 0, Weight::Euclidean).unwrap();
    assert!((d2 - 2.0 * PI).abs() < 1e-9, "{d2}");
}
