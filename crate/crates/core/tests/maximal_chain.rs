use anidil_core::expansive::{canonical_ellipsoids, Dilation};
use anidil_core::grid::{GridSpec, SampledField};
use anidil_core::group::{ContinuousGroup, Generator};
use anidil_core::linalg::{diag, from_rows};
use anidil_core::maximal::{
    nontangential_maximal_discrete, nontangential_maximal_parabolic, radial_maximal_discrete, ConeParams,
    TestFunction,
};
use num_complex::Complex64;

fn fields(spec: GridSpec) -> Vec<SampledField> {
    let bump = |c: [f64; 2], w: f64| {
        move |x: &[f64]| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
            (-std::f64::consts::PI * r2 / (w * w)).exp()
        }
    };
    let a = bump([0.0, 0.0], 1.0);
    let b = bump([1.5, -1.0], 0.7);
    let c = bump([-2.0, 1.0], 1.3);
    vec![
        SampledField::from_fn(spec, |x| Complex64::new(a(x), 0.0)).unwrap(),
        SampledField::from_fn(spec, |x| Complex64::new(b(x) - 0.5 * c(x), 0.0)).unwrap(),
        SampledField::from_fn(spec, |x| Complex64::new(a(x) * (3.0 * x[0]).cos(), 0.0)).unwrap(),
    ]
}

fn groups() -> Vec<ContinuousGroup> {
    let jordan = Dilation::new(from_rows(&[&[2.0, 1.0], &[0.0, 2.0]])).unwrap();
    vec![
        ContinuousGroup::new(Generator::new(diag(&[0.5, 0.5])).unwrap()).unwrap(),
        ContinuousGroup::from_dilation(&jordan).unwrap(),
        ContinuousGroup::new(Generator::new(diag(&[0.3, 0.7])).unwrap()).unwrap(),
    ]
}

#[test]
fn radial_below_nontangential_discrete() {
    let spec = GridSpec::new(2, 64, 16.0).unwrap();
    let phi = TestFunction::isotropic(2, 0.5).unwrap();
    for m in [diag(&[2.0, 2.0]), from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]), diag(&[1.5, 3.0])] {
        let a = Dilation::new(m).unwrap();
        let fam = canonical_ellipsoids(&a).unwrap();
        let cone = ConeParams::discrete(-2, 1);
        for f in fields(spec) {
            let rad = radial_maximal_discrete(&f, &phi, &a, &cone).unwrap();
            let non = nontangential_maximal_discrete(&f, &phi, &fam, &cone).unwrap();
            for (r, n) in rad.field.values.iter().zip(&non.field.values) {
                assert!(r.re <= n.re);
            }
        }
    }
}

#[test]
fn scales_factor_through_the_group() {
    // b^{-k} phi(A^{-k} y) with A = A_{t0} is the parabolic dilate at t0^k.
    let spec = GridSpec::new(2, 64, 16.0).unwrap();
    let phi = TestFunction::isotropic(2, 0.5).unwrap();
    let t0 = 2.0;
    for g in groups() {
        let a = Dilation::new(g.evaluate(t0).unwrap()).unwrap();
        assert!((a.b() - t0).abs() < 1e-12);
        let f = &fields(spec)[1];
        for k in -2..=1 {
            let disc = radial_maximal_discrete(f, &phi, &a, &ConeParams::discrete(k, k)).unwrap();
            let para = nontangential_maximal_parabolic(
                f,
                &phi,
                &g,
                &ConeParams::parabolic(vec![t0.powi(k)]).with_aperture(0.0),
            )
            .unwrap();
            let scale = para.field.max_abs();
            for (d, p) in disc.field.values.iter().zip(&para.field.values) {
                assert!((d.re - p.re).abs() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn refinement_only_increases() {
    let spec = GridSpec::new(2, 64, 16.0).unwrap();
    let phi = TestFunction::isotropic(2, 0.5).unwrap();
    let g = &groups()[1];
    let f = &fields(spec)[2];
    let cone = ConeParams::parabolic(ConeParams::log_spaced(0.25, 4.0, 5)).with_refinement();
    let out = nontangential_maximal_parabolic(f, &phi, g, &cone).unwrap();
    let r = out.refinement.unwrap();
    assert!((0.0..1.0).contains(&r), "{r}");
}
