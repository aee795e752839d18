//! Named experiments: each one exercises a verification pipeline from the
//! core library and produces a report bundle plus data artifacts.

use nalgebra::DVector;
use num::{BigInt, One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use submet_core::focal::{
    basic_focal_check, closed_form_jacobi, euler_series, focal_spectrum, ode_jacobi, attach_ray,
    JacobiEvaluator,
};
use submet_core::lapalg::{
    check_laplacian_closed, expand_witness, maximality_probe, reynolds, ClosureCertificate,
    Subalgebra,
};
use submet_core::poly::Poly;
use submet_core::polyfun::{
    eigenspace_basis, eigenvalues_below, gradient, gram_entry, l2_inner, laplace_beltrami,
    monomials_up_to, reduce_canonical,
};
use submet_core::report::{OpReport, TraceCaseReport};
use submet_core::spaces::geodesic_eval;
use submet_core::submetry::{
    average_function, basic_mean_curvature_report, commutator_residual, equidistance_check,
    fiber_tangent_frame, induced_metric_check, separation_margin_at, shape_operator,
    verify_separation, ChartKind, FiberChart, SubmetrySpec, CATALOG_SUBMETRIES,
};
use submet_core::{Error, PolyFunction, Rat, SpaceModel, Tolerances};

use crate::bundle::Artifacts;
use crate::params::Params;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [&'static str],
    pub run: fn(&Params, u64) -> Result<Output, Error>,
}

pub struct Output {
    pub reports: Vec<OpReport>,
    pub traces: Vec<TraceCaseReport>,
    pub artifacts: Artifacts,
}

impl Output {
    fn new() -> Self {
        Output { reports: Vec::new(), traces: Vec::new(), artifacts: Vec::new() }
    }
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "euler-identity",
        about: "Euler cotangent partial sums with digamma acceleration",
        keys: &["phi", "n", "seed", "out", "config"],
        run: euler_identity,
    },
    Experiment {
        name: "latitude-trace",
        about: "focal spectra and the reciprocal-sum trace on latitude circles",
        keys: &["grid", "window", "trace-window", "seed", "out", "config"],
        run: latitude_trace,
    },
    Experiment {
        name: "clifford-trace",
        about: "reciprocal-sum trace on Clifford tori and Hopf fibers",
        keys: &["grid", "trace-window", "seed", "out", "config"],
        run: clifford_trace,
    },
    Experiment {
        name: "basic-focal",
        about: "focal spectra agree across a fiber at matched normal directions",
        keys: &["window", "seed", "out", "config"],
        run: basic_focal,
    },
    Experiment {
        name: "basic-mean",
        about: "pushed mean curvature is constant along regular fibers",
        keys: &["samples", "seed", "out", "config"],
        run: basic_mean,
    },
    Experiment {
        name: "avg-commute",
        about: "fiber averaging commutes with the Laplace-Beltrami operator",
        keys: &["degree", "hopf-degree", "grid", "seed", "out", "config"],
        run: avg_commute,
    },
    Experiment {
        name: "reynolds",
        about: "Reynolds projection: module identity, idempotence, averaging",
        keys: &["seed", "out", "config"],
        run: reynolds_experiment,
    },
    Experiment {
        name: "closure",
        about: "Laplacian-closure certificates and the eigenspace maximality probe",
        keys: &["algebra", "space", "bound", "seed", "out", "config"],
        run: closure_experiment,
    },
    Experiment {
        name: "gram-quotient",
        about: "Gram of gradients, induced quotient metric, equidistant fibers",
        keys: &["samples", "seed", "out", "config"],
        run: gram_quotient,
    },
    Experiment {
        name: "separation",
        about: "quotient-map components separate fibers with positive margin",
        keys: &["algebra", "samples", "seed", "out", "config"],
        run: separation_experiment,
    },
    Experiment {
        name: "hygiene",
        about: "backend agreement, finite-difference oracles, eigenvalue tables",
        keys: &["rays", "seed", "out", "config"],
        run: hygiene,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

fn latitude_ray(phi: f64, theta: f64) -> (DVector<f64>, DVector<f64>) {
    let p = DVector::from_vec(vec![
        phi.sin() * theta.cos(),
        phi.sin() * theta.sin(),
        phi.cos(),
    ]);
    let v = DVector::from_vec(vec![
        -phi.cos() * theta.cos(),
        -phi.cos() * theta.sin(),
        phi.sin(),
    ]);
    (p, v)
}

fn latitude_chart(phi: f64) -> FiberChart {
    FiberChart {
        space: SpaceModel::from_id("s2").unwrap(),
        kind: ChartKind::LatitudeCircle { z: phi.cos() },
    }
}

/// A fixed unit normal to the Hopf fiber through (1/2, 1/2, 1/2, 1/2).
fn hopf_base() -> (SubmetrySpec, FiberChart, DVector<f64>, DVector<f64>) {
    let sigma = SubmetrySpec::from_id("s3-hopf").unwrap();
    let p = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
    let chart = sigma.fiber_at(&p).unwrap();
    let v = DVector::from_vec(vec![-0.5, -0.5, 0.5, 0.5]);
    (sigma, chart, p, v)
}

// ---------------------------------------------------------------------------

fn euler_identity(params: &Params, _seed: u64) -> Result<Output, Error> {
    let n = params.usize("n", 2000).map_err(usage)?;
    let phis: Vec<f64> = match params.get("phi") {
        Some(v) => vec![v.parse().map_err(|_| Error::Config(format!("bad phi `{v}`")))?],
        None => vec![PI / 6.0, PI / 4.0, PI / 3.0, 1.0],
    };
    let mut out = Output::new();
    let mut dat = String::from("# phi raw_residual accel_residual\n");
    for phi in phis {
        let (raw, accel, resid) = euler_series(phi, n)?;
        let cot = phi.cos() / phi.sin();
        dat.push_str(&format!("{phi:.12} {:.3e} {:.3e}\n", raw - cot, resid));
        out.traces.push(TraceCaseReport {
            case: format!("euler phi={phi:.6}"),
            phi,
            trace_direct: cot,
            trace_series_raw: raw,
            trace_series_accel: accel,
            tail_bound: (accel - raw).abs(),
            pass: (raw - cot).abs() <= 1e-3 && resid.abs() <= 1e-8,
        });
    }
    out.artifacts.push(("euler.dat".into(), dat));
    Ok(out)
}

fn latitude_trace(params: &Params, _seed: u64) -> Result<Output, Error> {
    let grid = params.usize("grid", 20).map_err(usage)?.max(2);
    let window = params.f64("window", 20.0).map_err(usage)?;
    let twindow = params.f64("trace-window", 30.0).map_err(usage)?;
    let tol = Tolerances::default();
    let phis: Vec<f64> = (0..grid)
        .map(|i| 0.1 + (PI - 0.2) * i as f64 / (grid - 1) as f64)
        .collect();
    let cases: Vec<Result<(OpReport, TraceCaseReport, String), Error>> = phis
        .par_iter()
        .map(|&phi| {
            let (p, v) = latitude_ray(phi, 0.0);
            let chart = latitude_chart(phi);
            let spec = focal_spectrum(&chart, &p, &v, window, &tol)?;
            let mut spread = 0.0f64;
            for (k, r) in spec.positives.iter().enumerate() {
                spread = spread.max((r.distance - (phi + k as f64 * PI)).abs());
                if r.multiplicity != 1 {
                    spread = f64::INFINITY;
                }
            }
            for (k, r) in spec.negatives.iter().enumerate() {
                spread = spread.max((r.distance - (phi - (k as f64 + 1.0) * PI)).abs());
                if r.multiplicity != 1 {
                    spread = f64::INFINITY;
                }
            }
            let case = format!("s2-latitude phi={phi:.6}");
            let shape = OpReport::new(
                &case,
                "focal-spectrum-shape",
                spec.total_multiplicity(),
                spread,
                1e-8,
            );
            let wide = focal_spectrum(&chart, &p, &v, twindow, &tol)?;
            let trace = submet_core::focal::trace_from_focal(&wide, &tol)?;
            let direct = shape_operator(&chart, &p, &v, &tol)?.trace();
            let t = TraceCaseReport {
                case,
                phi,
                trace_direct: direct,
                trace_series_raw: trace.raw,
                trace_series_accel: trace.accelerated,
                tail_bound: trace.tail_bound,
                pass: (trace.accelerated - direct).abs() <= 1e-6,
            };
            Ok((shape, t, spec.to_csv()))
        })
        .collect();
    let mut out = Output::new();
    let mut dat = String::from("# phi trace_residual\n");
    for (i, case) in cases.into_iter().enumerate() {
        let (shape, trace, csv) = case?;
        dat.push_str(&format!(
            "{:.12} {:.3e}\n",
            trace.phi,
            trace.trace_series_accel - trace.trace_direct
        ));
        if i == grid / 2 {
            out.artifacts.push(("latitude-spectrum.csv".into(), csv));
        }
        out.reports.push(shape);
        out.traces.push(trace);
    }
    out.artifacts.push(("latitude-trace.dat".into(), dat));
    Ok(out)
}

fn clifford_trace(params: &Params, _seed: u64) -> Result<Output, Error> {
    let grid = params.usize("grid", 12).map_err(usage)?.max(2);
    let twindow = params.f64("trace-window", 30.0).map_err(usage)?;
    let tol = Tolerances::default();
    let mut phis: Vec<f64> = (0..grid)
        .map(|i| 0.1 + (PI / 2.0 - 0.2) * i as f64 / (grid - 1) as f64)
        .collect();
    phis.push(PI / 4.0);
    let s3 = SpaceModel::from_id("s3").unwrap();
    let cases: Vec<Result<TraceCaseReport, Error>> = phis
        .par_iter()
        .map(|&phi| {
            let chart = FiberChart { space: s3.clone(), kind: ChartKind::CliffordTorus { phi } };
            let (a, b) = (0.8f64, 2.1f64);
            let p = DVector::from_vec(vec![
                phi.cos() * a.cos(),
                phi.cos() * a.sin(),
                phi.sin() * b.cos(),
                phi.sin() * b.sin(),
            ]);
            let v = DVector::from_vec(vec![
                phi.sin() * a.cos(),
                phi.sin() * a.sin(),
                -phi.cos() * b.cos(),
                -phi.cos() * b.sin(),
            ]);
            let spec = focal_spectrum(&chart, &p, &v, twindow, &tol)?;
            let trace = submet_core::focal::trace_from_focal(&spec, &tol)?;
            let direct = shape_operator(&chart, &p, &v, &tol)?.trace();
            let tolerance = if (phi - PI / 4.0).abs() < 1e-12 { 1e-8 } else { 1e-6 };
            Ok(TraceCaseReport {
                case: format!("s3-clifford phi={phi:.6}"),
                phi,
                trace_direct: direct,
                trace_series_raw: trace.raw,
                trace_series_accel: trace.accelerated,
                tail_bound: trace.tail_bound,
                pass: (trace.accelerated - direct).abs() <= tolerance,
            })
        })
        .collect();
    let mut out = Output::new();
    let mut dat = String::from("# phi trace_residual\n");
    for case in cases {
        let t = case?;
        dat.push_str(&format!(
            "{:.12} {:.3e}\n",
            t.phi,
            t.trace_series_accel - t.trace_direct
        ));
        out.traces.push(t);
    }
    // Hopf fibers are geodesics: the trace must vanish
    let (_, chart, p, v) = hopf_base();
    let spec = focal_spectrum(&chart, &p, &v, twindow, &tol)?;
    let trace = submet_core::focal::trace_from_focal(&spec, &tol)?;
    let direct = shape_operator(&chart, &p, &v, &tol)?.trace();
    out.traces.push(TraceCaseReport {
        case: "s3-hopf".into(),
        phi: 0.0,
        trace_direct: direct,
        trace_series_raw: trace.raw,
        trace_series_accel: trace.accelerated,
        tail_bound: trace.tail_bound,
        pass: direct.abs() <= 1e-12 && trace.accelerated.abs() <= 1e-8,
    });
    out.artifacts.push(("clifford-trace.dat".into(), dat));
    Ok(out)
}

fn basic_focal(params: &Params, _seed: u64) -> Result<Output, Error> {
    let window = params.f64("window", 15.0).map_err(usage)?;
    let tol = Tolerances::default();
    let mut out = Output::new();
    // latitude fiber z = 1/2, two points, both normals toward the north pole
    let sigma = SubmetrySpec::from_id("s2-latitude")?;
    let phi = PI / 3.0;
    let (p1, v1) = latitude_ray(phi, 0.0);
    let (p2, v2) = latitude_ray(phi, 2.4);
    let chart = sigma.fiber_at(&p1)?;
    let diff = basic_focal_check(&sigma, &chart, &p1, &v1, &p2, &v2, window, &tol)?;
    out.reports.push(OpReport::new(
        "s2-latitude z=1/2",
        "basic-focal-data",
        2,
        diff,
        1e-9,
    ));
    let same = basic_focal_check(&sigma, &chart, &p1, &v1, &p1, &v1, window, &tol)?;
    out.reports.push(OpReport::new(
        "s2-latitude z=1/2",
        "basic-focal-data-reflexive",
        1,
        same,
        0.0,
    ));
    // Hopf fiber: move along the fiber by the circle action and push v along
    let (sigma, chart, p1, v1) = hopf_base();
    let theta = 1.3f64;
    let rot = |x: &DVector<f64>| {
        DVector::from_vec(vec![
            x[0] * theta.cos() - x[1] * theta.sin(),
            x[0] * theta.sin() + x[1] * theta.cos(),
            x[2] * theta.cos() - x[3] * theta.sin(),
            x[2] * theta.sin() + x[3] * theta.cos(),
        ])
    };
    let p2 = rot(&p1);
    let v2 = rot(&v1);
    let diff = basic_focal_check(&sigma, &chart, &p1, &v1, &p2, &v2, window.min(10.0), &tol)?;
    out.reports.push(OpReport::new("s3-hopf", "basic-focal-data", 2, diff, 1e-8));
    Ok(out)
}

fn basic_mean(params: &Params, seed: u64) -> Result<Output, Error> {
    let samples = params.usize("samples", 100).map_err(usage)?;
    let tol = Tolerances::default();
    let ids = ["s2-latitude", "s2-fold", "s3-clifford", "s3-hopf"];
    let cases: Vec<Result<OpReport, Error>> = ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i as u64);
            let sigma = SubmetrySpec::from_id(id)?;
            let p = sigma.random_regular_point(&mut rng);
            let chart = sigma.fiber_at(&p)?;
            let report = basic_mean_curvature_report(&sigma, &chart, samples, &tol, &mut rng)?;
            Ok(OpReport::new(*id, "basic-mean-curvature", samples, report.spread, 1e-6))
        })
        .collect();
    let mut out = Output::new();
    for c in cases {
        out.reports.push(c?);
    }
    Ok(out)
}

fn monomial_functions(space: &SpaceModel, maxdeg: usize) -> Vec<PolyFunction> {
    let nv = space.ambient_dim();
    monomials_up_to(nv, maxdeg)
        .into_iter()
        .map(|e| reduce_canonical(space, &Poly::monomial(nv, e, Rat::one())))
        .collect()
}

fn avg_commute(params: &Params, seed: u64) -> Result<Output, Error> {
    let degree = params.usize("degree", 6).map_err(usage)?;
    let hopf_degree = params.usize("hopf-degree", 3).map_err(usage)?;
    let grid = params.usize("grid", 500).map_err(usage)?;
    let mut out = Output::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for id in ["s2-latitude", "s2-fold"] {
        let sigma = SubmetrySpec::from_id(id)?;
        let fns = monomial_functions(&sigma.space, degree);
        let mut spread = 0.0f64;
        let n = fns.len();
        for f in &fns {
            spread = spread.max(commutator_residual(f, &sigma, grid, &mut rng)?);
        }
        out.reports.push(OpReport::new(id, "avg-commute-exact", n, spread, 0.0));
    }
    let sigma = SubmetrySpec::from_id("s3-hopf")?;
    let fns = monomial_functions(&sigma.space, hopf_degree);
    let mut spread = 0.0f64;
    let n = fns.len();
    for f in &fns {
        spread = spread.max(commutator_residual(f, &sigma, grid, &mut rng)?);
    }
    out.reports.push(OpReport::new("s3-hopf", "avg-commute-numeric", n, spread, 1e-8));
    Ok(out)
}

fn reynolds_experiment(_params: &Params, _seed: u64) -> Result<Output, Error> {
    let sp = SpaceModel::from_id("s2")?;
    let cutoff = rint(200);
    let mut out = Output::new();
    for (label, gens) in [("z", vec!["1 z"]), ("z^2", vec!["1 z^2"])] {
        let case = format!("s2 <{label}>");
        let a = Subalgebra::parse(&sp, &gens, 8)?;
        let a_basis: Vec<PolyFunction> = a.basis_up_to(4).into_iter().cloned().collect();
        let ambient = monomial_functions(&sp, 4);
        let mut violations = 0usize;
        let mut n = 0usize;
        for av in &a_basis {
            for b in &ambient {
                let lhs = reynolds(&a, &av.mul(b), &cutoff)?;
                let rhs = av.mul(&reynolds(&a, b, &cutoff)?);
                n += 1;
                if lhs != rhs {
                    violations += 1;
                }
            }
        }
        out.reports.push(OpReport::new(&case, "reynolds-module-identity", n, violations as f64, 0.0));
    }
    // the projection of x^2 onto <z> is (1 - z^2)/2, and it matches the
    // quadrature-free fiber average over latitude circles
    let a = Subalgebra::parse(&sp, &["1 z"], 8)?;
    let x2 = PolyFunction::parse(&sp, "1 x^2")?;
    let expect = PolyFunction::parse(&sp, "1/2 - 1/2 z^2")?;
    let projected = reynolds(&a, &x2, &cutoff)?;
    let sigma = SubmetrySpec::from_id("s2-latitude")?;
    let averaged = average_function(&x2, &sigma)?;
    let exact = projected == expect && projected == averaged;
    out.reports.push(OpReport::new(
        "s2 <z>",
        "reynolds-x^2-closed-form",
        1,
        if exact { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

fn closure_experiment(params: &Params, seed: u64) -> Result<Output, Error> {
    let mut out = Output::new();
    if let Some(algebra) = params.get("algebra") {
        // single user-specified algebra: certificate or failure report
        let space = SpaceModel::from_id(params.get("space").unwrap_or("s2"))?;
        let bound = params.usize("bound", 9).map_err(usage)?;
        let gens: Vec<&str> = algebra.split(',').map(|s| s.trim()).collect();
        let a = Subalgebra::parse(&space, &gens, bound)?;
        let case = format!("{} <{}>", space.id, algebra);
        match check_laplacian_closed(&a, bound)? {
            ClosureCertificate::Closed { .. } => {
                out.reports.push(OpReport::new(&case, "laplacian-closure", gens.len(), 0.0, 0.0));
            }
            ClosureCertificate::NotClosedWithinBound { generator, residual, bound } => {
                out.reports.push(OpReport {
                    case,
                    operation: format!(
                        "laplacian-closure: generator {generator} not closed up to degree \
                         {bound}; residual {}",
                        residual.to_text()
                    ),
                    samples: gens.len(),
                    spread: f64::INFINITY,
                    tolerance: 0.0,
                    pass: false,
                });
            }
        }
        return Ok(out);
    }
    let sp = SpaceModel::from_id("s2")?;
    let s3 = SpaceModel::from_id("s3")?;
    // positive certificates, with the witnesses re-expanded exactly
    let closed_cases: [(&SpaceModel, &str, Vec<&str>, i64); 3] = [
        (&sp, "z", vec!["1 z"], 2),
        (&sp, "z^2", vec!["1 z^2"], 0),
        (
            &s3,
            "h1, h2, h3",
            vec![
                "1 x1^2 + 1 x2^2 - 1 x3^2 - 1 x4^2",
                "2 x1 x3 + 2 x2 x4",
                "2 x1 x4 - 2 x2 x3",
            ],
            8,
        ),
    ];
    for (space, label, gens, eigen) in closed_cases {
        let a = Subalgebra::parse(space, &gens, 8)?;
        let cert = check_laplacian_closed(&a, 8)?;
        let mut ok = cert.is_closed();
        if let ClosureCertificate::Closed { witnesses } = &cert {
            // degree-one and quadratic generators are eigenfunctions, so the
            // witness must literally be lambda * generator
            if eigen > 0 {
                for (w, g) in witnesses.iter().zip(&a.generators) {
                    ok &= expand_witness(&a, 8, w) == g.scale(&rint(eigen));
                }
            }
        }
        out.reports.push(OpReport::new(
            format!("{} <{label}>", space.id),
            "laplacian-closure",
            gens.len(),
            if ok { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    // <z^3> must fail, with a residual proportional to z
    let a = Subalgebra::parse(&sp, &["1 z^3"], 9)?;
    let z = PolyFunction::parse(&sp, "1 z")?;
    let counterexample_ok = match check_laplacian_closed(&a, 9)? {
        ClosureCertificate::NotClosedWithinBound { residual, .. } => {
            let c = l2_inner(&residual, &z) / l2_inner(&z, &z);
            residual == z.scale(&c) && !c.is_zero()
        }
        _ => false,
    };
    out.reports.push(OpReport::new(
        "s2 <z^3>",
        "closure-counterexample-residual-is-z",
        1,
        if counterexample_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    // maximality probe: the closed algebras fill their eigenspaces...
    let cutoff = rint(30);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (label, gens, sub_id) in [
        ("z", vec!["1 z"], "s2-latitude"),
        ("z^2", vec!["1 z^2"], "s2-fold"),
    ] {
        let sigma = SubmetrySpec::from_id(sub_id)?;
        let a = Subalgebra::parse(&sp, &gens, 5)?;
        let rep = maximality_probe(&a, &sigma, &cutoff, &mut rng)?;
        out.reports.push(OpReport::new(
            format!("s2 <{label}>"),
            "maximality-probe",
            rep.per_lambda.len(),
            if rep.pass() { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    // ...while <z^3> misses z in the lambda = 2 eigenspace
    let sigma = SubmetrySpec::from_id("s2-latitude")?;
    let a = Subalgebra::parse(&sp, &["1 z^3"], 6)?;
    let rep = maximality_probe(&a, &sigma, &rint(6), &mut rng)?;
    let exhibited = !rep.pass()
        && rep.per_lambda.iter().any(|p| {
            (p.lambda - 2.0).abs() < 1e-9
                && p.dim_algebra == 0
                && p.dim_basic == 1
                && p.mismatch.as_ref().is_some_and(|g| {
                    let c = l2_inner(g, &z) / l2_inner(&z, &z);
                    !c.is_zero() && *g == z.scale(&c)
                })
        });
    out.reports.push(OpReport::new(
        "s2 <z^3>",
        "maximality-probe-exhibits-z",
        rep.per_lambda.len(),
        if exhibited { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

fn gram_quotient(params: &Params, seed: u64) -> Result<Output, Error> {
    let samples = params.usize("samples", 30).map_err(usage)?;
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Output::new();
    // exact: Gram entries of the s2 quotient maps lie in the algebra
    for (id, gens) in [("s2-latitude", vec!["1 z"]), ("s2-fold", vec!["1 z^2"])] {
        let sigma = SubmetrySpec::from_id(id)?;
        let a = Subalgebra::parse(&sigma.space, &gens, 8)?;
        let g = gram_entry(&sigma.rho[0], &sigma.rho[0]);
        out.reports.push(OpReport::new(
            id,
            "gram-entry-in-algebra",
            1,
            if a.contains(&g) { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    // Hopf: numeric fiber constancy plus exact membership of the entries
    let sigma = SubmetrySpec::from_id("s3-hopf")?;
    let p = sigma.random_regular_point(&mut rng);
    let chart = sigma.fiber_at(&p)?;
    let report = induced_metric_check(&sigma, &chart, samples, &mut rng)?;
    out.reports.push(OpReport::new("s3-hopf", "gram-fiber-constancy", samples, report.spread, 1e-10));
    let gens: Vec<&str> = vec![
        "1 x1^2 + 1 x2^2 - 1 x3^2 - 1 x4^2",
        "2 x1 x3 + 2 x2 x4",
        "2 x1 x4 - 2 x2 x3",
    ];
    let a = Subalgebra::parse(&sigma.space, &gens, 8)?;
    let mut member = true;
    let mut n = 0usize;
    for i in 0..3 {
        for j in i..3 {
            member &= a.contains(&gram_entry(&sigma.rho[i], &sigma.rho[j]));
            n += 1;
        }
    }
    out.reports.push(OpReport::new(
        "s3-hopf",
        "gram-entries-in-algebra",
        n,
        if member { 0.0 } else { 1.0 },
        0.0,
    ));
    // quotient length of the latitude foliation
    let sigma = SubmetrySpec::from_id("s2-latitude")?;
    let (p, _) = latitude_ray(1.1, 0.3);
    let chart = sigma.fiber_at(&p)?;
    let report = induced_metric_check(&sigma, &chart, samples, &mut rng)?;
    let length = report.quotient_length.unwrap_or(f64::NAN);
    out.reports.push(OpReport::new(
        "s2-latitude",
        "quotient-length-pi",
        samples,
        (length - PI).abs(),
        1e-10,
    ));
    // equidistance of fiber pairs
    let f1 = sigma.fiber_at(&latitude_ray(0.9, 0.0).0)?;
    let f2 = sigma.fiber_at(&latitude_ray(2.0, 0.0).0)?;
    let (min, max) = equidistance_check(&f1, &f2, samples, &tol, &mut rng)?;
    out.reports.push(OpReport::new("s2-latitude", "equidistant-fibers", samples, max - min, 1e-8));
    let sigma = SubmetrySpec::from_id("s3-hopf")?;
    let f1 = sigma.fiber_at(&DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]))?;
    let f2 = sigma.fiber_at(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]))?;
    let (min, max) = equidistance_check(&f1, &f2, samples, &tol, &mut rng)?;
    out.reports.push(OpReport::new("s3-hopf", "equidistant-fibers", samples, max - min, 1e-8));
    Ok(out)
}

fn separation_experiment(params: &Params, seed: u64) -> Result<Output, Error> {
    let samples = params.usize("samples", 25).map_err(usage)?;
    let mut out = Output::new();
    if let Some(algebra) = params.get("algebra") {
        // user-specified candidate separating set on the latitude foliation
        let sigma = SubmetrySpec::from_id("s2-latitude")?;
        let gens: Vec<PolyFunction> = algebra
            .split(',')
            .map(|s| PolyFunction::parse(&sigma.space, s.trim()))
            .collect::<Result<_, _>>()?;
        let phi = 1.0f64;
        let (p, _) = latitude_ray(phi, 0.0);
        let q = DVector::from_vec(vec![p[0], p[1], -p[2]]); // the antipodal latitude
        let margin = separation_margin_at(&gens, &p, &q);
        out.reports.push(OpReport {
            case: format!("s2-latitude <{algebra}>"),
            operation: format!(
                "separation: margin {margin:.3e} between the latitudes z={:.3} and z={:.3}",
                p[2], q[2]
            ),
            samples: 1,
            spread: if margin > 0.0 { 0.0 } else { 1.0 },
            tolerance: 0.0,
            pass: margin > 0.0,
        });
        return Ok(out);
    }
    // the catalog quotient maps separate their fibers
    let cases: Vec<Result<OpReport, Error>> = CATALOG_SUBMETRIES
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i as u64);
            let sigma = SubmetrySpec::from_id(id)?;
            let report = verify_separation(&sigma.rho, &sigma, samples, 1e-10, &mut rng)?;
            let ok = report.margin > 0.0 && report.violation.is_none();
            Ok(OpReport {
                case: id.to_string(),
                operation: format!("verify-separation margin={:.3e}", report.margin),
                samples: report.pairs,
                spread: if ok { 0.0 } else { 1.0 },
                tolerance: 0.0,
                pass: ok,
            })
        })
        .collect();
    for c in cases {
        out.reports.push(c?);
    }
    // z^2 alone cannot separate antipodal latitudes: the margin between the
    // fibers z = c and z = -c is exactly zero
    let sigma = SubmetrySpec::from_id("s2-latitude")?;
    let z2 = PolyFunction::parse(&sigma.space, "1 z^2")?;
    let (p, _) = latitude_ray(1.0, 0.0);
    // mirror latitude, built by exact negation so z^2 agrees to the bit
    let q = DVector::from_vec(vec![p[0], p[1], -p[2]]);
    let margin = separation_margin_at(&[z2], &p, &q);
    let distinct = (p[2] - q[2]).abs() > 0.5;
    out.reports.push(OpReport {
        case: "s2-latitude <z^2>".into(),
        operation: format!(
            "separation-counterexample: margin {margin:.3e} between z={:.3} and z={:.3}",
            p[2], q[2]
        ),
        samples: 1,
        spread: if margin == 0.0 && distinct { 0.0 } else { 1.0 },
        tolerance: 0.0,
        pass: margin == 0.0 && distinct,
    });
    Ok(out)
}

fn hygiene(params: &Params, seed: u64) -> Result<Output, Error> {
    let rays = params.usize("rays", 50).map_err(usage)?;
    let tol = Tolerances::default();
    let mut out = Output::new();
    // closed-form vs ODE Jacobi backends on random attached rays
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = ["s2-latitude", "s3-hopf", "s3-clifford", "t2-circles"];
    let mut spread = 0.0f64;
    let mut count = 0usize;
    while count < rays {
        let id = ids[count % ids.len()];
        let sigma = SubmetrySpec::from_id(id)?;
        let p = sigma.random_regular_point(&mut rng);
        let chart = sigma.fiber_at(&p)?;
        let frame = fiber_tangent_frame(&chart, &p, &tol)?;
        let mut v = sigma.space.random_unit_tangent(&p, &mut rng);
        for e in &frame {
            let d = v.dot(e);
            v -= e * d;
        }
        if v.norm() < 0.3 {
            continue;
        }
        v = v.normalize();
        let attached = attach_ray(&chart, &p, &v, &tol)?;
        let cf = closed_form_jacobi(&attached)?;
        let ode = ode_jacobi(&attached, 6.0, 1.0 / 512.0);
        for k in 1..=4 {
            let t = 6.0 * k as f64 / 4.0;
            spread = spread.max((cf.eval(t).determinant() - ode.eval(t).determinant()).abs());
        }
        count += 1;
    }
    out.reports.push(OpReport::new("catalog", "jacobi-backend-agreement", rays, spread, 1e-9));
    // gradient vs finite-difference directional derivative
    let mut spread = 0.0f64;
    let mut n = 0usize;
    for (sid, text) in [
        ("s2", "1 x^2 y - 2 z^3 + 1/3 x z"),
        ("s3", "1 x1 x3 - 1 x2^2 x4"),
        ("t2", "1 c1 s2 - 2 s1^2 c2"),
    ] {
        let space = SpaceModel::from_id(sid)?;
        let f = PolyFunction::parse(&space, text)?;
        let grad = gradient(&f);
        for _ in 0..20 {
            let p = space.random_point(&mut rng);
            let w = space.random_unit_tangent(&p, &mut rng);
            let h = tol.fd_step;
            let fd = (f.eval(&geodesic_eval(&space, &p, &w, h, &tol)?)
                - f.eval(&geodesic_eval(&space, &p, &w, -h, &tol)?))
                / (2.0 * h);
            spread = spread.max((fd - grad.eval(&p).dot(&w)).abs());
            n += 1;
        }
    }
    out.reports.push(OpReport::new("catalog", "gradient-fd-oracle", n, spread, 1e-6));
    // exact eigenvalue tables: lambda = m(m + N - 2) with the classical
    // spherical-harmonic dimensions, and Delta f = lambda f exactly
    let mut ok = true;
    let mut n = 0usize;
    for sid in ["s2", "s3", "s4"] {
        let space = SpaceModel::from_id(sid)?;
        let nv = space.ambient_dim();
        let dim_h = |m: usize| -> usize {
            let c = |n: usize, k: usize| -> usize {
                if n < k {
                    return 0;
                }
                (1..=k).fold(1usize, |acc, i| acc * (n - k + i) / i)
            };
            c(m + nv - 1, nv - 1) - if m >= 2 { c(m + nv - 3, nv - 1) } else { 0 }
        };
        let maxdeg = 8usize;
        let big = (maxdeg * (maxdeg + nv - 2)) as f64;
        let lambdas = eigenvalues_below(&space, big, maxdeg);
        for m in 0..=maxdeg {
            let lam = rint((m * (m + nv - 2)) as i64);
            ok &= lambdas.contains(&lam);
            let basis = eigenspace_basis(&space, &lam, maxdeg);
            ok &= basis.len() == dim_h(m);
            for f in &basis {
                ok &= laplace_beltrami(f) == f.scale(&lam);
                ok &= f.components.len() == 1 && f.components.contains_key(&lam);
                n += 1;
            }
        }
    }
    out.reports.push(OpReport::new(
        "spheres",
        "eigenvalue-tables-exact",
        n,
        if ok { 0.0 } else { 1.0 },
        0.0,
    ));
    Ok(out)
}

fn usage(e: crate::params::UsageError) -> Error {
    Error::Config(e.0)
}
