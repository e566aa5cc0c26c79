use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

use anidil_core::equivalence::{
    canonical_form_with, equivalent_with, lin_equivalent_with, partition_count, partitions, realize,
};
use anidil_core::expansive::{
    canonical_ellipsoids, is_expansive_generator_seeded, is_expansive_matrix, Dilation, StepQuasiNorm,
};
use anidil_core::grid::{GridSpec, SampledField};
use anidil_core::group::{positive_counterpart, quasi_triangle_constant, ContinuousGroup, Generator, Side};
use anidil_core::kernels::{davies_gaffney_probe, evolve, nyquist_level, pde_residual, semigroup_defect, KernelKind, KernelSpec};
use anidil_core::linalg::{eig, jordan_signature, lyapunov_residual, norm2, Matrix};
use anidil_core::maximal::{
    lp_quasinorm, nontangential_maximal_discrete, nontangential_maximal_parabolic, radial_maximal_discrete,
    ConeParams, TestFunction,
};
use anidil_core::{Error, Result};

use crate::args::{
    EquivArgs, EquivMode, EvolveArgs, FieldArgs, GeneratorArgs, GroupArgs, MatrixArg, MaximalArgs, MaximalMode,
    PartitionArgs, ProbeArgs,
};
use crate::report::Context;

/// Frequencies per axis in the PDE residual check.
const RESIDUAL_GRID: usize = 64;
/// Sample count for the quasi-triangle estimate.
const TRIANGLE_SAMPLES: usize = 2000;
/// `(s, t)` pairs for the group-law residual.
const GROUP_LAW_PAIRS: [(f64, f64); 4] = [(0.5, 2.0), (2.0, 3.0), (0.1, 7.0), (1.5, 1.5)];

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dilation(ctx: &mut Context, path: &Path) -> Result<(Dilation, Option<String>)> {
    let (m, label) = ctx.load_matrix(path)?;
    Ok((Dilation::new(m)?, label))
}

pub fn analyze(ctx: &mut Context, args: &MatrixArg) -> Result<Value> {
    let (m, label) = ctx.load_matrix(&args.input)?;
    let spectrum = eig(&m, ctx.tol.cluster)?;
    let expansive = is_expansive_matrix(&m)?;
    let signature = jordan_signature(&m, &ctx.tol.spectral())?;
    let det = m.determinant();
    let eigenvalues: Vec<Value> = spectrum
        .eigenvalues
        .iter()
        .map(|e| json!({"re": e.value.re, "im": e.value.im, "multiplicity": e.multiplicity}))
        .collect();
    Ok(json!({
        "label": label,
        "n": m.nrows(),
        "expansive": expansive,
        "min_modulus": spectrum.min_modulus(),
        "det": det,
        "b": det.abs(),
        "eigenvalues": eigenvalues,
        "signature": signature,
    }))
}

pub fn generator(ctx: &mut Context, args: &GeneratorArgs) -> Result<Value> {
    let (a, label) = dilation(ctx, &args.matrix.input)?;
    let counterpart = positive_counterpart(&a)?;
    let group = ContinuousGroup::from_dilation(&a)?;
    let p = group.generator().matrix().clone();
    let b = group.form(Side::Primal).matrix();
    let b_dual = group.form(Side::Dual).matrix();
    let reconstructed = group.evaluate(a.b())?;
    let witness = is_expansive_generator_seeded(&p, ctx.seed)?;

    let mut out = json!({
        "label": label,
        "n": a.dim(),
        "b": a.b(),
        "P": rows(&p),
        "trace": p.trace(),
        "B": rows(b),
        "B_dual": rows(b_dual),
        "positive_counterpart": rows(&counterpart),
        "lyapunov_residual": norm2(&lyapunov_residual(b, &p)),
        "lyapunov_residual_dual": norm2(&lyapunov_residual(b_dual, &p.transpose())),
        "group_law_residual": group.group_law_residual(&GROUP_LAW_PAIRS)?,
        "reconstruction_residual": norm2(&(reconstructed - &counterpart)) / norm2(&counterpart),
        "expansivity": witness,
    });
    if args.verify {
        let mut rng = StdRng::seed_from_u64(ctx.seed);
        let smooth = quasi_triangle_constant(&group, TRIANGLE_SAMPLES, &mut rng)?;
        let step = StepQuasiNorm::new(&a)?;
        out["verify"] = json!({
            "quasi_triangle_sampled": smooth,
            "quasi_triangle_samples": TRIANGLE_SAMPLES,
            "step_omega": step.omega(),
            "step_triangle_constant": step.triangle_constant(),
        });
    }
    Ok(out)
}

pub fn equiv(ctx: &mut Context, args: &EquivArgs) -> Result<Value> {
    let (a1, l1) = dilation(ctx, &args.input)?;
    let (a2, l2) = dilation(ctx, &args.input2)?;
    let verdict = match args.mode {
        EquivMode::Plain => equivalent_with(&a1, &a2, args.horizon, ctx.tol.generator)?,
        EquivMode::Linear => lin_equivalent_with(&a1, &a2, &ctx.tol.spectral(), ctx.tol.magnitude)?,
    };
    let mut out = serde_json::to_value(&verdict)?;
    out["labels"] = json!([l1, l2]);
    if args.mode == EquivMode::Plain {
        out["K"] = json!(args.horizon);
    }
    Ok(out)
}

pub fn classify(ctx: &mut Context, args: &MatrixArg) -> Result<Value> {
    let (a, label) = dilation(ctx, &args.input)?;
    let tols = ctx.tol.spectral();
    let canonical = canonical_form_with(&a, &tols)?;
    let realized = realize(&canonical);
    let back = Dilation::new(realized.clone())?;
    let round_trip = canonical_form_with(&back, &tols)?.approx_eq(&canonical, 1e-9);
    let lin = lin_equivalent_with(&a, &back, &tols, ctx.tol.magnitude)?;
    Ok(json!({
        "label": label,
        "canonical": canonical,
        "realized": rows(&realized),
        "realized_det": realized.determinant(),
        "round_trip": round_trip,
        "lin_equivalent_to_input": lin.equivalent,
    }))
}

pub fn partitions_cmd(_ctx: &mut Context, args: &PartitionArgs) -> Result<Value> {
    let list = partitions(args.n)?;
    Ok(json!({
        "n": args.n,
        "count": partition_count(args.n)?,
        "partitions": list,
    }))
}

fn build_group(ctx: &mut Context, args: &GroupArgs) -> Result<Option<ContinuousGroup>> {
    let Some(path) = &args.input else {
        return Ok(None);
    };
    let (m, _) = ctx.load_matrix(path)?;
    let group = if args.as_generator {
        ContinuousGroup::new(Generator::new(m)?)?
    } else {
        ContinuousGroup::from_dilation(&Dilation::new(m)?)?
    };
    Ok(Some(group))
}

fn build_field(ctx: &mut Context, args: &FieldArgs, n: Option<usize>) -> Result<SampledField> {
    let field = match &args.field {
        Some(path) => ctx.load_field(path)?,
        None => {
            if !(args.width > 0.0) {
                return Err(Error::InvalidParameter(format!("width {} must be > 0", args.width)));
            }
            let spec = GridSpec::new(n.unwrap_or(args.dim), args.size, args.length)?;
            let w2 = args.width * args.width;
            SampledField::from_fn(spec, |x| {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                Complex64::new((-std::f64::consts::PI * r2 / w2).exp(), 0.0)
            })?
            .with_meta(json!({"synthesized": "gaussian", "width": args.width}))
        }
    };
    if let Some(n) = n {
        if field.spec.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: field.spec.n,
            });
        }
    }
    Ok(field)
}

fn field_path(prefix: &Path, i: usize) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!(".{i}.field"));
    PathBuf::from(name)
}

fn kernel(kind: &str, group: Option<ContinuousGroup>) -> Result<KernelSpec> {
    KernelSpec::new(kind.parse::<KernelKind>()?, group)
}

pub fn evolve_cmd(ctx: &mut Context, args: &EvolveArgs) -> Result<Value> {
    let group = build_group(ctx, &args.group)?;
    let n = group.as_ref().map(|g| g.dim());
    let k = kernel(&args.kernel, group)?;
    let f = build_field(ctx, &args.field, n)?;
    let spec = f.spec;

    let residual_xis = if args.verify && k.group().is_some() {
        let coarse = GridSpec::new(spec.n, RESIDUAL_GRID.min(spec.size), spec.length)?;
        Some(coarse.frequencies())
    } else {
        None
    };
    let mass = |g: &SampledField| {
        let s: Complex64 = g.values.iter().sum();
        s.re * spec.cell_volume()
    };

    let mut steps = Vec::with_capacity(args.t.len());
    for (i, &t) in args.t.iter().enumerate() {
        let out = evolve(&k, &f, t)?;
        let mut step = json!({
            "t": t,
            "max_abs": out.max_abs(),
            "mass": mass(&out),
            "nyquist_level": nyquist_level(&k, &spec, t)?,
        });
        if args.verify {
            step["pde_residual"] = match &residual_xis {
                Some(xis) => json!(pde_residual(&k, t, xis)?),
                None => Value::Null,
            };
            step["semigroup_defect"] = json!(semigroup_defect(&k, t, t, &spec)?);
        }
        if let Some(prefix) = &args.field_out {
            let path = field_path(prefix, i);
            ctx.write_field(&out, &path, args.csv)?;
            step["field"] = json!(path);
        }
        steps.push(step);
    }
    Ok(json!({
        "kernel": k.kind(),
        "grid": spec,
        "input_mass": mass(&f),
        "steps": steps,
    }))
}

pub fn maximal_cmd(ctx: &mut Context, args: &MaximalArgs) -> Result<Value> {
    let path = args
        .group
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("maximal needs --in".into()))?;
    let (m, _) = ctx.load_matrix(path)?;
    let n = m.nrows();
    let f = build_field(ctx, &args.field, Some(n))?;
    let phi = TestFunction::isotropic(n, args.phi_width)?;

    let out = match args.mode {
        MaximalMode::Radial | MaximalMode::Nontangential => {
            if args.group.as_generator {
                return Err(Error::InvalidParameter("discrete maximal functions need a dilation, not a generator".into()));
            }
            let a = Dilation::new(m)?;
            let cone = ConeParams::discrete(args.k_min, args.k_max).with_aperture(args.aperture);
            if args.mode == MaximalMode::Radial {
                radial_maximal_discrete(&f, &phi, &a, &cone)?
            } else {
                nontangential_maximal_discrete(&f, &phi, &canonical_ellipsoids(&a)?, &cone)?
            }
        }
        MaximalMode::Parabolic => {
            let group = if args.group.as_generator {
                ContinuousGroup::new(Generator::new(m)?)?
            } else {
                ContinuousGroup::from_dilation(&Dilation::new(m)?)?
            };
            let mut cone = ConeParams::parabolic(args.t.clone()).with_aperture(args.aperture);
            cone.refine = args.refine;
            nontangential_maximal_parabolic(&f, &phi, &group, &cone)?
        }
    };

    let lp_max = lp_quasinorm(&out.field, args.p)?;
    let lp_f = lp_quasinorm(&f, args.p)?;
    let mut report = json!({
        "mode": args.mode,
        "grid": f.spec,
        "meta": out.field.meta,
        "phi_width": args.phi_width,
        "levels": out.levels,
        "refinement": out.refinement,
        "max": out.field.max_abs(),
        "p": args.p,
        "lp_maximal": lp_max,
        "lp_field": lp_f,
        "ratio": if lp_f > 0.0 { json!(lp_max / lp_f) } else { Value::Null },
    });
    if let Some(prefix) = &args.field_out {
        let path = field_path(prefix, 0);
        ctx.write_field(&out.field, &path, args.csv)?;
        report["field"] = json!(path);
    }
    Ok(report)
}

pub fn probe_cmd(ctx: &mut Context, args: &ProbeArgs) -> Result<Value> {
    let group = build_group(ctx, &args.group)?;
    let k = kernel(&args.kernel, group)?;
    let f1 = ctx.load_field(&args.field1)?;
    let f2 = ctx.load_field(&args.field2)?;
    let probe = davies_gaffney_probe(&k, &f1, &f2, &args.t)?;
    Ok(serde_json::to_value(&probe)?)
}
