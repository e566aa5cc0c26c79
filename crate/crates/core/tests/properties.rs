mod common;

use anidil_core::equivalence::{canonical_form, lin_equivalent, realize};
use anidil_core::expansive::{canonical_ellipsoids, is_expansive_generator, step_quasi_norm, Dilation, StepQuasiNorm};
use anidil_core::group::{ContinuousGroup, Generator, Side};
use anidil_core::kernels::KernelSpec;
use anidil_core::linalg::{expm, jordan_signature, logm_positive, norm2, Matrix, Tolerances};
use nalgebra::DVector;
use proptest::prelude::*;

use common::*;

fn group_with_vector() -> impl Strategy<Value = (Matrix, Vec<f64>)> {
    generator().prop_flat_map(|p| {
        let n = p.nrows();
        (Just(p), vector(n))
    })
}

fn dilation_with_vectors() -> impl Strategy<Value = (Matrix, Vec<f64>, Vec<f64>)> {
    dilation_matrix().prop_flat_map(|a| {
        let n = a.nrows();
        (Just(a), vector(n), vector(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expm_inverts_logm(a in dilation_matrix()) {
        let back = expm(&logm_positive(&a).unwrap()).unwrap();
        prop_assert!(norm2(&(back - &a)) <= 1e-10 * norm2(&a));
    }

    #[test]
    fn signature_survives_similarity(
        lambda in 1.2f64..3.0,
        gap in 0.2f64..1.0,
        c in 0.5f64..2.0,
        d in -1.0f64..1.0,
        e in -1.0f64..1.0,
        f in fill(9),
    ) {
        let t = Matrix::from_row_slice(3, 3, &[lambda, c, d, 0.0, lambda, e, 0.0, 0.0, lambda + gap]);
        let mut s = Matrix::identity(3, 3);
        for (k, v) in f.iter().enumerate() {
            s[(k / 3, k % 3)] += 0.3 * v;
        }
        let conj = &s * &t * s.clone().try_inverse().unwrap();
        let tols = Tolerances::default();
        let a = jordan_signature(&t, &tols).unwrap();
        let b = jordan_signature(&conj, &tols).unwrap();
        prop_assert!(a.matches_rescaled(&b, 1.0, 1e-8), "{a:?} vs {b:?}");
        let groups = a.groups();
        prop_assert_eq!(groups.len(), 2);
        prop_assert_eq!(&groups[0].1, &vec![2]);
    }

    #[test]
    fn group_law_homogeneity_monotonicity((p, x) in group_with_vector(), s in 0.1f64..10.0, t in 0.1f64..10.0) {
        let g = ContinuousGroup::new(Generator::normalized(p).unwrap()).unwrap();
        let prod = g.evaluate(s).unwrap() * g.evaluate(t).unwrap();
        let joint = g.evaluate(s * t).unwrap();
        prop_assert!(norm2(&(prod - &joint)) <= 1e-10 * norm2(&joint).max(1.0));

        let rho = g.quasi_norm(&x, Side::Primal).unwrap();
        let ax: Vec<f64> = (g.evaluate(t).unwrap() * DVector::from_column_slice(&x)).iter().copied().collect();
        let rho_t = g.quasi_norm(&ax, Side::Primal).unwrap();
        prop_assert!((rho_t - t * rho).abs() <= 1e-9 * t * rho);

        let form = g.form(Side::Primal);
        let v = DVector::from_column_slice(&x);
        let q = |tau: f64| form.quadratic(&(g.evaluate(tau).unwrap() * &v));
        let (lo, hi) = (s.min(t), s.max(t));
        if hi > lo * (1.0 + 1e-9) {
            prop_assert!(q(lo) < q(hi));
        }
    }

    #[test]
    fn step_norm_homogeneity_and_triangle((a, x, y) in dilation_with_vectors()) {
        let d = Dilation::new(a.clone()).unwrap();
        let step = StepQuasiNorm::new(&d).unwrap();
        let ax: Vec<f64> = (&a * DVector::from_column_slice(&x)).iter().copied().collect();
        let b = d.b();
        prop_assert!((step.eval(&ax) - b * step.eval(&x)).abs() <= 1e-9 * b * step.eval(&x));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
        prop_assert!(step.eval(&sum) <= step.triangle_constant() * (step.eval(&x) + step.eval(&y)) * (1.0 + 1e-12));
    }

    #[test]
    fn ellipsoid_volumes_scale_by_b(a in dilation_matrix(), k in -6i64..6) {
        let d = Dilation::new(a).unwrap();
        let fam = canonical_ellipsoids(&d).unwrap();
        prop_assert!((fam.volume(0) - 1.0).abs() < 1e-10);
        prop_assert!((fam.volume(k) - d.b().powi(k as i32)).abs() <= 1e-9 * d.b().powi(k as i32));
        // the origin has step norm 0 and everything else is positive
        prop_assert_eq!(step_quasi_norm(&fam, &vec![0.0; d.dim()]), 0.0);
    }

    #[test]
    fn canonical_form_is_idempotent(a in dilation_matrix()) {
        let c = canonical_form(&Dilation::new(a).unwrap()).unwrap();
        let again = canonical_form(&Dilation::new(realize(&c)).unwrap()).unwrap();
        prop_assert!(c.approx_eq(&again, 1e-9), "{c:?} vs {again:?}");
        prop_assert!((realize(&c).determinant() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lin_equivalence_under_conjugation(a in dilation_matrix(), f in fill(9)) {
        let n = a.nrows();
        let mut s = Matrix::identity(n, n);
        for (k, v) in f.iter().take(n * n).enumerate() {
            s[(k / n, k % n)] += 0.4 * v;
        }
        let conj = s.clone().try_inverse().unwrap() * &a * &s;
        let v = lin_equivalent(&Dilation::new(a).unwrap(), &Dilation::new(conj).unwrap()).unwrap();
        prop_assert!(v.equivalent);
    }

    #[test]
    fn expansivity_conditions_agree(
        reals in prop::collection::vec(prop_oneof![0.3f64..2.0, -2.0f64..-0.3], 3),
        f in fill(18),
    ) {
        let p = conjugated_triangular(&reals, &f);
        let w = is_expansive_generator(&p).unwrap();
        prop_assert!(w.consistent(), "{w:?}");
        prop_assert_eq!(w.expansive, reals.iter().all(|r| *r > 0.0));
    }

    #[test]
    fn kernel_multipliers_factor_through_the_group((p, xi) in group_with_vector(), s in 0.2f64..5.0, t in 0.2f64..5.0) {
        let g = ContinuousGroup::new(Generator::normalized(p).unwrap()).unwrap();
        let dual = g.evaluate_side(s, Side::Dual).unwrap();
        let eta: Vec<f64> = (dual * DVector::from_column_slice(&xi)).iter().copied().collect();
        for k in [KernelSpec::gaussian_b(g.clone()), KernelSpec::quasinorm(g.clone())] {
            let direct = k.kernel_hat(&xi, s * t).unwrap();
            let via = k.kernel_hat(&eta, t).unwrap();
            prop_assert!(direct > 0.0 || via < 1e-300);
            prop_assert!(direct <= 1.0);
            prop_assert!((direct - via).abs() <= 1e-9 * direct.max(1e-300) + 1e-300);
            prop_assert!(k.kernel_hat(&xi, t).unwrap() >= k.kernel_hat(&xi, 2.0 * t).unwrap());
        }
    }
}
