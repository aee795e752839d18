//! Catalog manifold submetries: explicit fiber charts, the fiberwise
//! averaging operator, mean curvature, and the regular-set / induced-metric /
//! equidistance checks.
//!
//! Fibers are parameterized per catalog case; there is no generic
//! leaf-finding. The exact averaging backend covers the cases whose fibers
//! are coordinate circles or tori (latitude, fold, torus circles); the Hopf
//! and Clifford cases go through quadrature plus an eigenspace-projected
//! rationalization.

use nalgebra::{DMatrix, DVector};
use num::Zero;
use rand::Rng;
use std::f64::consts::PI;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::rationalize;
use crate::poly::{Poly, Rat};
use crate::polyfun::{
    eigenspace_basis, gradient, laplace_beltrami, reduce_canonical, GradientField, PolyFunction,
};
use crate::spaces::{distance, SpaceModel};

pub const CATALOG_SUBMETRIES: [&str; 5] =
    ["s2-latitude", "s2-fold", "s3-hopf", "s3-clifford", "t2-circles"];

/// A catalog manifold submetry: the quotient map as a list of basic
/// polynomial functions whose joint level sets are the fibers.
#[derive(Clone, Debug)]
pub struct SubmetrySpec {
    pub space: SpaceModel,
    pub id: String,
    pub rho: Vec<PolyFunction>,
}

/// One fiber, with an explicit trigonometric parameterization.
#[derive(Clone, Debug)]
pub struct FiberChart {
    pub space: SpaceModel,
    pub kind: ChartKind,
}

#[derive(Clone, Debug)]
pub enum ChartKind {
    /// s2 fiber z = const
    LatitudeCircle { z: f64 },
    /// s2 fold fiber {z = a} u {z = -a}, a >= 0; one component when a = 0
    FoldPair { a: f64 },
    /// s3 Hopf great-circle fiber through a base point
    HopfCircle { base: DVector<f64> },
    /// s3 product torus x1^2+x2^2 = cos^2 phi, 0 < phi < pi/2
    CliffordTorus { phi: f64 },
    /// Clifford family singular fiber: a core great circle
    CoreCircle { first: bool },
    /// t2 fiber with the first circle frozen
    TorusCircle { theta1: f64 },
    /// dimension-0 fiber (s2 poles)
    Point { p: DVector<f64> },
}

impl SubmetrySpec {
    pub fn from_id(id: &str) -> Result<SubmetrySpec> {
        let (space_id, gens): (&str, &[&str]) = match id {
            "s2-latitude" => ("s2", &["1 z"]),
            "s2-fold" => ("s2", &["1 z^2"]),
            "s3-hopf" => (
                "s3",
                &[
                    "1 x1^2 + 1 x2^2 - 1 x3^2 - 1 x4^2",
                    "2 x1 x3 + 2 x2 x4",
                    "2 x1 x4 - 2 x2 x3",
                ],
            ),
            "s3-clifford" => ("s3", &["1 x1^2 + 1 x2^2"]),
            "t2-circles" => ("t2", &["1 c1", "1 s1"]),
            other => return Err(Error::UnknownSubmetry(other.to_string())),
        };
        let space = SpaceModel::from_id(space_id)?;
        let rho = gens
            .iter()
            .map(|g| PolyFunction::parse(&space, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(SubmetrySpec { space, id: id.to_string(), rho })
    }

    /// Quotient-map value at a point.
    pub fn rho_eval(&self, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rho.len(), self.rho.iter().map(|f| f.eval(p)))
    }

    /// Pushforward d rho(w) = (<grad rho_i, w>)_i.
    pub fn rho_push(&self, p: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rho.len(),
            self.rho.iter().map(|f| gradient(f).eval(p).dot(w)),
        )
    }

    /// The fiber through a point.
    pub fn fiber_at(&self, p: &DVector<f64>) -> Result<FiberChart> {
        let kind = match self.id.as_str() {
            "s2-latitude" => {
                let z = p[2];
                if 1.0 - z * z < 1e-14 {
                    ChartKind::Point { p: p.clone() }
                } else {
                    ChartKind::LatitudeCircle { z }
                }
            }
            "s2-fold" => {
                let a = p[2].abs();
                if 1.0 - a * a < 1e-14 {
                    ChartKind::Point { p: p.clone() }
                } else {
                    ChartKind::FoldPair { a }
                }
            }
            "s3-hopf" => ChartKind::HopfCircle { base: p.clone() },
            "s3-clifford" => {
                let c2 = p[0] * p[0] + p[1] * p[1];
                if c2 < 1e-14 {
                    ChartKind::CoreCircle { first: false }
                } else if 1.0 - c2 < 1e-14 {
                    ChartKind::CoreCircle { first: true }
                } else {
                    ChartKind::CliffordTorus { phi: c2.sqrt().min(1.0).acos() }
                }
            }
            "t2-circles" => ChartKind::TorusCircle { theta1: p[1].atan2(p[0]) },
            other => return Err(Error::UnknownSubmetry(other.to_string())),
        };
        Ok(FiberChart { space: self.space.clone(), kind })
    }

    /// Does the exact averaging backend cover this submetry?
    pub fn exact_backend(&self) -> bool {
        matches!(self.id.as_str(), "s2-latitude" | "s2-fold" | "t2-circles")
    }

    /// Is the fiber through p of maximal dimension?
    pub fn is_regular(&self, p: &DVector<f64>) -> bool {
        match self.fiber_at(p) {
            Ok(chart) => chart.regular(),
            Err(_) => false,
        }
    }

    /// A uniform random point of the regular set.
    pub fn random_regular_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        loop {
            let p = self.space.random_point(rng);
            if self.is_regular(&p) && self.fiber_margin(&p) > 1e-3 {
                return p;
            }
        }
    }

    // distance-like margin from the singular set, used to keep random
    // samples numerically comfortable
    fn fiber_margin(&self, p: &DVector<f64>) -> f64 {
        match self.id.as_str() {
            "s2-latitude" => 1.0 - p[2].abs(),
            "s2-fold" => (1.0 - p[2].abs()).min(p[2].abs()),
            "s3-clifford" => {
                let c2 = p[0] * p[0] + p[1] * p[1];
                c2.min(1.0 - c2)
            }
            _ => 1.0,
        }
    }
}

impl FiberChart {
    pub fn dim(&self) -> usize {
        match &self.kind {
            ChartKind::Point { .. } => 0,
            ChartKind::CliffordTorus { .. } => 2,
            _ => 1,
        }
    }

    /// Regular means: of maximal dimension within its catalog family.
    pub fn regular(&self) -> bool {
        !matches!(self.kind, ChartKind::Point { .. } | ChartKind::CoreCircle { .. })
    }

    pub fn n_components(&self) -> usize {
        match &self.kind {
            ChartKind::FoldPair { a } if *a > 1e-14 => 2,
            _ => 1,
        }
    }

    /// Parameterization of one component at angles u (len = dim).
    pub fn param(&self, comp: usize, u: &[f64]) -> DVector<f64> {
        match &self.kind {
            ChartKind::LatitudeCircle { z } => {
                let r = (1.0 - z * z).sqrt();
                DVector::from_vec(vec![r * u[0].cos(), r * u[0].sin(), *z])
            }
            ChartKind::FoldPair { a } => {
                let z = if comp == 0 { *a } else { -*a };
                let r = (1.0 - z * z).sqrt();
                DVector::from_vec(vec![r * u[0].cos(), r * u[0].sin(), z])
            }
            ChartKind::HopfCircle { base } => {
                let (c, s) = (u[0].cos(), u[0].sin());
                DVector::from_vec(vec![
                    base[0] * c - base[1] * s,
                    base[0] * s + base[1] * c,
                    base[2] * c - base[3] * s,
                    base[2] * s + base[3] * c,
                ])
            }
            ChartKind::CliffordTorus { phi } => {
                let (cp, sp) = (phi.cos(), phi.sin());
                DVector::from_vec(vec![
                    cp * u[0].cos(),
                    cp * u[0].sin(),
                    sp * u[1].cos(),
                    sp * u[1].sin(),
                ])
            }
            ChartKind::CoreCircle { first } => {
                if *first {
                    DVector::from_vec(vec![u[0].cos(), u[0].sin(), 0.0, 0.0])
                } else {
                    DVector::from_vec(vec![0.0, 0.0, u[0].cos(), u[0].sin()])
                }
            }
            ChartKind::TorusCircle { theta1 } => DVector::from_vec(vec![
                theta1.cos(),
                theta1.sin(),
                u[0].cos(),
                u[0].sin(),
            ]),
            ChartKind::Point { p } => p.clone(),
        }
    }

    /// First partial derivative in parameter axis `axis`.
    pub fn param_d1(&self, comp: usize, axis: usize, u: &[f64]) -> DVector<f64> {
        let mut du = u.to_vec();
        // all charts are trigonometric in each angle separately, so the
        // derivative is the quarter-period shift on that axis
        du[axis] += PI / 2.0;
        let shifted = self.param(comp, &du);
        let base = self.param(comp, u);
        self.trig_axis_combine(comp, axis, u, &shifted, &base)
    }

    /// Second partial derivative d^2/du_a du_b.
    pub fn param_d2(&self, comp: usize, a: usize, b: usize, u: &[f64]) -> DVector<f64> {
        // differentiate param_d1 in axis b, again exactly via phase shifts
        let mut du = u.to_vec();
        du[b] += PI / 2.0;
        let shifted = self.param_d1_raw(comp, a, &du);
        let base = self.param_d1_raw(comp, a, u);
        self.trig_axis_combine(comp, b, u, &shifted, &base)
    }

    // exact d/du_axis for pure product-of-trig charts: each ambient
    // coordinate is either independent of u_axis or a single cos/sin in it,
    // so f'(u) = f(u + pi/2) on the coordinates that depend on u_axis and 0
    // elsewhere. trig_axis_combine selects per coordinate.
    fn trig_axis_combine(
        &self,
        comp: usize,
        axis: usize,
        u: &[f64],
        shifted: &DVector<f64>,
        base: &DVector<f64>,
    ) -> DVector<f64> {
        let mask = self.axis_mask(comp, axis);
        let _ = (u, base);
        DVector::from_iterator(
            shifted.len(),
            shifted.iter().enumerate().map(|(i, &v)| if mask[i] { v } else { 0.0 }),
        )
    }

    fn param_d1_raw(&self, comp: usize, axis: usize, u: &[f64]) -> DVector<f64> {
        let mut du = u.to_vec();
        du[axis] += PI / 2.0;
        let shifted = self.param(comp, &du);
        let mask = self.axis_mask(comp, axis);
        DVector::from_iterator(
            shifted.len(),
            shifted.iter().enumerate().map(|(i, &v)| if mask[i] { v } else { 0.0 }),
        )
    }

    // which ambient coordinates depend on parameter `axis`
    fn axis_mask(&self, _comp: usize, axis: usize) -> Vec<bool> {
        match &self.kind {
            ChartKind::LatitudeCircle { .. } | ChartKind::FoldPair { .. } => {
                vec![true, true, false]
            }
            ChartKind::HopfCircle { .. } => vec![true, true, true, true],
            ChartKind::CliffordTorus { .. } => {
                if axis == 0 {
                    vec![true, true, false, false]
                } else {
                    vec![false, false, true, true]
                }
            }
            ChartKind::CoreCircle { first } => {
                if *first {
                    vec![true, true, false, false]
                } else {
                    vec![false, false, true, true]
                }
            }
            ChartKind::TorusCircle { .. } => vec![false, false, true, true],
            ChartKind::Point { .. } => vec![false; 3],
        }
    }

    /// Riemannian volume of one component.
    pub fn component_volume(&self, _comp: usize) -> f64 {
        match &self.kind {
            ChartKind::LatitudeCircle { z } => 2.0 * PI * (1.0 - z * z).sqrt(),
            ChartKind::FoldPair { a } => 2.0 * PI * (1.0 - a * a).sqrt(),
            ChartKind::HopfCircle { .. } => 2.0 * PI,
            ChartKind::CliffordTorus { phi } => {
                4.0 * PI * PI * phi.cos() * phi.sin()
            }
            ChartKind::CoreCircle { .. } => 2.0 * PI,
            ChartKind::TorusCircle { .. } => 2.0 * PI,
            ChartKind::Point { .. } => 1.0,
        }
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_components()).map(|c| self.component_volume(c)).sum()
    }

    /// Quadrature nodes (component, parameters, weight). Trapezoid in each
    /// angle: exact for trigonometric degree < order. Weights sum to the
    /// fiber volume.
    pub fn quad_nodes(&self, order: usize) -> Vec<(usize, Vec<f64>, f64)> {
        let n = order.max(4);
        let mut out = Vec::new();
        for comp in 0..self.n_components() {
            match self.dim() {
                0 => out.push((comp, vec![], self.component_volume(comp))),
                1 => {
                    let w = self.component_volume(comp) / n as f64;
                    for i in 0..n {
                        out.push((comp, vec![2.0 * PI * i as f64 / n as f64], w));
                    }
                }
                2 => {
                    let w = self.component_volume(comp) / (n * n) as f64;
                    for i in 0..n {
                        for j in 0..n {
                            out.push((
                                comp,
                                vec![
                                    2.0 * PI * i as f64 / n as f64,
                                    2.0 * PI * j as f64 / n as f64,
                                ],
                                w,
                            ));
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        out
    }

    /// Invert the parameterization at a point of the fiber.
    pub fn locate(&self, p: &DVector<f64>, tol: &Tolerances) -> Result<(usize, Vec<f64>)> {
        let (comp, u) = match &self.kind {
            ChartKind::LatitudeCircle { .. } => (0, vec![p[1].atan2(p[0])]),
            ChartKind::FoldPair { .. } => {
                let comp = if p[2] >= 0.0 { 0 } else { 1 };
                (comp, vec![p[1].atan2(p[0])])
            }
            ChartKind::HopfCircle { base } => {
                // p = e^{i theta} base in C^2 coordinates (x1+ix2, x3+ix4)
                let re = p[0] * base[0] + p[1] * base[1] + p[2] * base[2] + p[3] * base[3];
                let im = p[1] * base[0] - p[0] * base[1] + p[3] * base[2] - p[2] * base[3];
                (0, vec![im.atan2(re)])
            }
            ChartKind::CliffordTorus { .. } => {
                (0, vec![p[1].atan2(p[0]), p[3].atan2(p[2])])
            }
            ChartKind::CoreCircle { first } => {
                if *first {
                    (0, vec![p[1].atan2(p[0])])
                } else {
                    (0, vec![p[3].atan2(p[2])])
                }
            }
            ChartKind::TorusCircle { .. } => (0, vec![p[3].atan2(p[2])]),
            ChartKind::Point { .. } => (0, vec![]),
        };
        let resid = (self.param(comp, &u) - p).norm();
        if resid > tol.chart_on_space.max(1e-9) {
            return Err(Error::OffSpace { residual: resid });
        }
        Ok((comp, u))
    }

    pub fn contains(&self, p: &DVector<f64>, tol: &Tolerances) -> bool {
        self.locate(p, tol).is_ok()
    }

    /// A uniform random point on the fiber.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let comp = if self.n_components() == 2 && rng.gen_bool(0.5) { 1 } else { 0 };
        let u: Vec<f64> = (0..self.dim()).map(|_| rng.gen::<f64>() * 2.0 * PI).collect();
        self.param(comp, &u)
    }
}

// ---------------------------------------------------------------------------
// averaging
// ---------------------------------------------------------------------------

fn fiber_trig_degree(f: &PolyFunction) -> usize {
    f.degree()
}

/// Volume-weighted fiber average of a polynomial function, by quadrature
/// exact for the function's trigonometric degree along the fiber.
pub fn average(f: &PolyFunction, chart: &FiberChart) -> f64 {
    let order = 2 * fiber_trig_degree(f) + 4;
    average_pointwise(|p| f.eval(p), chart, order)
}

/// Same, at an explicit quadrature order; errors when the order cannot be
/// exact for the function's degree.
pub fn average_exactly(f: &PolyFunction, chart: &FiberChart, order: usize) -> Result<f64> {
    let needed = 2 * fiber_trig_degree(f) + 1;
    if order < needed {
        return Err(Error::QuadratureOrder { order, needed });
    }
    Ok(average_pointwise(|p| f.eval(p), chart, order))
}

/// Average an arbitrary pointwise function over the fiber.
pub fn average_pointwise<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    chart: &FiberChart,
    order: usize,
) -> f64 {
    let nodes = chart.quad_nodes(order);
    let vol: f64 = nodes.iter().map(|(_, _, w)| w).sum();
    let acc: f64 = nodes
        .iter()
        .map(|(comp, u, w)| w * f(&chart.param(*comp, u)))
        .sum();
    acc / vol
}

// exact circle moment E[cos^a sin^b] = (a-1)!!(b-1)!!/(a+b)!! for even a, b
fn circle_moment(a: u8, b: u8) -> Rat {
    use num::{BigInt, One, Zero};
    if a % 2 == 1 || b % 2 == 1 {
        return Rat::zero();
    }
    let dfac = |n: i64| -> BigInt {
        let mut acc = BigInt::one();
        let mut k = n;
        while k > 1 {
            acc *= BigInt::from(k);
            k -= 2;
        }
        acc
    };
    Rat::new(
        dfac(a as i64 - 1) * dfac(b as i64 - 1),
        dfac(a as i64 + b as i64),
    )
}

/// Exact averaging backend: Av(f) as a PolyFunction, for the catalog cases
/// whose fibers are coordinate circles.
pub fn average_function(f: &PolyFunction, sigma: &SubmetrySpec) -> Result<PolyFunction> {
    if !sigma.exact_backend() {
        return Err(Error::ExactBackendUnsupported(sigma.id.clone()));
    }
    let nv = sigma.space.ambient_dim();
    let total = f.total_poly();
    let mut out = Poly::zero(nv);
    match sigma.id.as_str() {
        // fiber z = const: substitute x = r cos, y = r sin with r^2 = 1-z^2
        "s2-latitude" | "s2-fold" => {
            for (e, c) in &total.terms {
                let (i, j, k) = (e[0], e[1], e[2]);
                let m = circle_moment(i, j);
                if m.is_zero() {
                    continue;
                }
                // x^i y^j z^k averages to E[cos^i sin^j] (1-z^2)^{(i+j)/2} z^k
                let s = (i as usize + j as usize) / 2;
                let one_minus_z2 =
                    Poly::one(nv).sub(&Poly::monomial(nv, vec![0, 0, 2], num::One::one()));
                let zk = Poly::monomial(nv, vec![0, 0, k], c * &m);
                out = out.add(&one_minus_z2.pow(s).mul(&zk));
            }
            if sigma.id == "s2-fold" {
                // even part in z
                let mut even = Poly::zero(nv);
                for (e, c) in &out.terms {
                    if e[2] % 2 == 0 {
                        even.add_term(e.clone(), c.clone());
                    }
                }
                out = even;
            }
        }
        // fiber freezes the first circle, averages the second
        "t2-circles" => {
            for (e, c) in &total.terms {
                let m = circle_moment(e[2], e[3]);
                if m.is_zero() {
                    continue;
                }
                out.add_term(vec![e[0], e[1], 0, 0], c * &m);
            }
        }
        _ => unreachable!(),
    }
    Ok(reduce_canonical(&sigma.space, &out))
}

/// Numeric averaging backend: quadrature averages at sample points plus an
/// eigenspace-projected rationalization of Av(f).
pub struct AveragedFunction {
    pub samples: Vec<(DVector<f64>, f64)>,
    pub rationalized: PolyFunction,
    pub fit_residual: f64,
}

pub fn average_function_numeric<R: Rng + ?Sized>(
    f: &PolyFunction,
    sigma: &SubmetrySpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<AveragedFunction> {
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let p = sigma.random_regular_point(rng);
        let chart = sigma.fiber_at(&p)?;
        samples.push((p, average(f, &chart)));
    }
    // Av preserves each eigenspace, so Av(f) lies in the span of the
    // eigenspaces already present in f
    let mut basis: Vec<PolyFunction> = Vec::new();
    for lam in f.components.keys() {
        basis.extend(eigenspace_basis(&sigma.space, lam, f.degree()));
    }
    let rows = samples.len();
    let cols = basis.len();
    let a = DMatrix::from_fn(rows, cols, |i, j| basis[j].eval(&samples[i].0));
    let y = DVector::from_iterator(rows, samples.iter().map(|(_, v)| *v));
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&y, 1e-12).map_err(|e| Error::Config(e.to_string()))?;
    let mut g = PolyFunction::zero(&sigma.space);
    for (j, b) in basis.iter().enumerate() {
        let c = rationalize(coef[j], 1_000_000);
        if !c.is_zero() {
            g = g.add(&b.scale(&c));
        }
    }
    let fit_residual = samples
        .iter()
        .map(|(p, v)| (g.eval(p) - v).abs())
        .fold(0.0, f64::max);
    Ok(AveragedFunction { samples, rationalized: g, fit_residual })
}

/// sup over the grid of |Av(Delta f) - Delta(Av f)|. Exactly zero as a
/// polynomial identity on the exact backend.
pub fn commutator_residual<R: Rng + ?Sized>(
    f: &PolyFunction,
    sigma: &SubmetrySpec,
    grid: usize,
    rng: &mut R,
) -> Result<f64> {
    if sigma.exact_backend() {
        let lhs = average_function(&laplace_beltrami(f), sigma)?;
        let rhs = laplace_beltrami(&average_function(f, sigma)?);
        let diff = lhs.sub(&rhs);
        if diff.is_zero() {
            return Ok(0.0);
        }
        let mut sup: f64 = 0.0;
        for _ in 0..grid {
            let p = sigma.space.random_point(rng);
            sup = sup.max(diff.eval(&p).abs());
        }
        return Ok(sup);
    }
    let df = laplace_beltrami(f);
    let avf = average_function_numeric(f, sigma, 60, rng)?;
    let davf = laplace_beltrami(&avf.rationalized);
    let mut sup: f64 = 0.0;
    for _ in 0..grid {
        let p = sigma.random_regular_point(rng);
        let chart = sigma.fiber_at(&p)?;
        let lhs = average(&df, &chart);
        sup = sup.max((lhs - davf.eval(&p)).abs());
    }
    Ok(sup)
}

// ---------------------------------------------------------------------------
// mean curvature and shape data
// ---------------------------------------------------------------------------

/// Orthonormalized coordinate frame of the fiber at parameter u. The
/// catalog charts have orthogonal coordinate directions, so this is just
/// normalization; rank deficiency is an error.
fn fiber_frame(chart: &FiberChart, comp: usize, u: &[f64]) -> Result<Vec<DVector<f64>>> {
    let mut frame = Vec::new();
    for a in 0..chart.dim() {
        let t = chart.param_d1(comp, a, u);
        let n = t.norm();
        if n < 1e-10 {
            return Err(Error::DegenerateChart);
        }
        frame.push(t / n);
    }
    Ok(frame)
}

/// Orthonormal basis of the fiber tangent space at a point of the fiber.
pub fn fiber_tangent_frame(
    chart: &FiberChart,
    p: &DVector<f64>,
    tol: &Tolerances,
) -> Result<Vec<DVector<f64>>> {
    if chart.dim() == 0 {
        return Ok(Vec::new());
    }
    let (comp, u) = chart.locate(p, tol)?;
    fiber_frame(chart, comp, &u)
}

/// Mean curvature vector of the fiber at a point: the trace of the second
/// fundamental form of the fiber as a submanifold of the space.
pub fn mean_curvature(
    chart: &FiberChart,
    p: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    if chart.dim() == 0 {
        return Ok(DVector::zeros(chart.space.ambient_dim()));
    }
    let (comp, u) = chart.locate(p, tol)?;
    let frame = fiber_frame(chart, comp, &u)?;
    let mut h = DVector::zeros(chart.space.ambient_dim());
    for a in 0..chart.dim() {
        let ta = chart.param_d1(comp, a, &u);
        let na2 = ta.norm_squared();
        let acc = chart.param_d2(comp, a, a, &u) / na2;
        // normal part within the space: project to T_pM, remove fiber tangent
        let mut w = chart.space.tangent_project_raw(p, &acc);
        for e in &frame {
            let d = w.dot(e);
            w -= e * d;
        }
        h += w;
    }
    Ok(h)
}

/// Shape operator A_v of the fiber at p in the unit normal direction v,
/// in the orthonormalized coordinate frame.
pub struct ShapeOperator {
    pub matrix: DMatrix<f64>,
}

impl ShapeOperator {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

pub fn shape_operator(
    chart: &FiberChart,
    p: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<ShapeOperator> {
    let (comp, u) = chart.locate(p, tol)?;
    let k = chart.dim();
    if k == 0 {
        return Ok(ShapeOperator { matrix: DMatrix::zeros(0, 0) });
    }
    let frame = fiber_frame(chart, comp, &u)?;
    for e in &frame {
        if e.dot(v).abs() > 1e-8 {
            return Err(Error::NonUnitVector { norm: e.dot(v) });
        }
    }
    let norms: Vec<f64> = (0..k).map(|a| chart.param_d1(comp, a, &u).norm()).collect();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = chart.param_d2(comp, a, b, &u).dot(v) / (norms[a] * norms[b]);
        }
    }
    let sym_resid = (&m - m.transpose()).norm();
    if sym_resid > 1e-10 {
        return Err(Error::Config(format!(
            "shape operator asymmetric (residual {sym_resid:.3e})"
        )));
    }
    Ok(ShapeOperator { matrix: m })
}

/// Sampled check that d rho(H) is constant along a fiber.
#[derive(Clone, Debug)]
pub struct MeanCurvatureReport {
    pub case: String,
    pub points: Vec<DVector<f64>>,
    pub h_vectors: Vec<DVector<f64>>,
    pub pushed: Vec<DVector<f64>>,
    pub spread: f64,
}

pub fn basic_mean_curvature_report<R: Rng + ?Sized>(
    sigma: &SubmetrySpec,
    chart: &FiberChart,
    samples: usize,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<MeanCurvatureReport> {
    if !chart.regular() {
        return Err(Error::SingularSample(sigma.id.clone()));
    }
    let mut points = Vec::with_capacity(samples);
    let mut h_vectors = Vec::with_capacity(samples);
    let mut pushed = Vec::with_capacity(samples);
    for _ in 0..samples {
        let p = chart.random_point(rng);
        let h = mean_curvature(chart, &p, tol)?;
        pushed.push(sigma.rho_push(&p, &h));
        points.push(p);
        h_vectors.push(h);
    }
    let mut spread: f64 = 0.0;
    for i in 0..pushed.len() {
        for j in 0..i {
            spread = spread.max((&pushed[i] - &pushed[j]).norm());
        }
    }
    Ok(MeanCurvatureReport {
        case: sigma.id.clone(),
        points,
        h_vectors,
        pushed,
        spread,
    })
}

// ---------------------------------------------------------------------------
// regular set, induced metric, equidistance
// ---------------------------------------------------------------------------

/// Maximal rank of the Gram matrix of quotient-map gradients over samples,
/// with per-sample flags for where the maximum is achieved.
pub fn regular_rank_region<R: Rng + ?Sized>(
    rho: &[PolyFunction],
    samples: usize,
    rng: &mut R,
) -> (usize, Vec<(DVector<f64>, usize)>) {
    if rho.is_empty() {
        return (0, Vec::new());
    }
    let space = rho[0].space.clone();
    let grads: Vec<GradientField> = rho.iter().map(gradient).collect();
    let k = rho.len();
    let mut out = Vec::with_capacity(samples);
    let mut m = 0;
    for _ in 0..samples {
        let p = space.random_point(rng);
        let gs: Vec<DVector<f64>> = grads.iter().map(|g| g.eval(&p)).collect();
        let gram = DMatrix::from_fn(k, k, |i, j| gs[i].dot(&gs[j]));
        let rank = numeric_rank(&gram, 1e-8);
        m = m.max(rank);
        out.push((p, rank));
    }
    (m, out)
}

pub fn numeric_rank(m: &DMatrix<f64>, rel_threshold: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_threshold * top).count()
}

/// Well-definedness of the induced quotient metric: the Gram matrix of the
/// quotient map is constant along the fiber.
#[derive(Clone, Debug)]
pub struct InducedMetricReport {
    pub gram_value: DMatrix<f64>,
    pub spread: f64,
    /// for 1-dimensional quotients: total quotient length
    pub quotient_length: Option<f64>,
}

pub fn induced_metric_check<R: Rng + ?Sized>(
    sigma: &SubmetrySpec,
    chart: &FiberChart,
    samples: usize,
    rng: &mut R,
) -> Result<InducedMetricReport> {
    let k = sigma.rho.len();
    let grads: Vec<GradientField> = sigma.rho.iter().map(gradient).collect();
    let gram_at = |p: &DVector<f64>| {
        let gs: Vec<DVector<f64>> = grads.iter().map(|g| g.eval(p)).collect();
        DMatrix::from_fn(k, k, |i, j| gs[i].dot(&gs[j]))
    };
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        pts.push(chart.random_point(rng));
    }
    let g0 = gram_at(&pts[0]);
    let mut spread: f64 = 0.0;
    for p in &pts[1..] {
        spread = spread.max((gram_at(p) - &g0).norm());
    }
    let quotient_length = match sigma.id.as_str() {
        // quotient coordinate x = z in (-1, 1); metric b = 1/gram. Writing
        // gram = (1 - x^2) q(x) exactly and substituting x = cos(s) turns
        // the length integral into the regular form int_0^pi ds / sqrt(q).
        "s2-latitude" => {
            let rho0 = &sigma.rho[0];
            let gram_scalar = crate::polyfun::gram_entry(rho0, rho0).total_poly();
            let u = meridian_restriction(&gram_scalar)
                .ok_or_else(|| Error::Config("Gram entry not zonal".into()))?;
            let q = divide_by_one_minus_z2(&u)
                .ok_or_else(|| Error::Config("Gram entry not divisible by 1-z^2".into()))?;
            let n = 4000;
            let integrand = |s: f64| 1.0 / q.eval_f64(&[s.cos()]).sqrt();
            let h = PI / n as f64;
            let mut acc = integrand(0.0) + integrand(PI);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * integrand(i as f64 * h);
            }
            Some(acc * h / 3.0)
        }
        _ => None,
    };
    Ok(InducedMetricReport { gram_value: g0, spread, quotient_length })
}

// restriction of an ambient s2 polynomial to the meridian y = 0,
// x = sqrt(1-z^2), as a univariate polynomial in z; None when an odd
// x-power survives (the function is then not zonal)
fn meridian_restriction(p: &Poly) -> Option<Poly> {
    use num::One;
    let mut out = Poly::zero(1);
    for (e, c) in &p.terms {
        if e[1] != 0 {
            continue;
        }
        if e[0] % 2 == 1 {
            return None;
        }
        let s = (e[0] / 2) as usize;
        let base = Poly::one(1).sub(&Poly::monomial(1, vec![2], Rat::one()));
        out = out.add(&base.pow(s).mul(&Poly::monomial(1, vec![e[2]], c.clone())));
    }
    Some(out)
}

// exact division of a univariate polynomial by (1 - z^2); None when the
// remainder is nonzero
fn divide_by_one_minus_z2(u: &Poly) -> Option<Poly> {
    use num::One;
    let divisor = Poly::one(1).sub(&Poly::monomial(1, vec![2], Rat::one()));
    let mut rem = u.clone();
    let mut q = Poly::zero(1);
    loop {
        let top = match rem.terms.iter().next_back() {
            Some((e, c)) if e[0] >= 2 => (e.clone(), c.clone()),
            _ => break,
        };
        let m = Poly::monomial(1, vec![top.0[0] - 2], -top.1);
        q = q.add(&m);
        rem = rem.sub(&m.mul(&divisor));
    }
    if rem.is_zero() {
        Some(q)
    } else {
        None
    }
}

/// Distance from a point to a fiber: minimum of the closed-form distance
/// over quadrature nodes, refined by golden-section sweeps per angle.
pub fn distance_to_fiber(
    p: &DVector<f64>,
    chart: &FiberChart,
    tol: &Tolerances,
) -> Result<f64> {
    let space = &chart.space;
    let dist = |comp: usize, u: &[f64]| -> f64 {
        distance(space, p, &chart.param(comp, u), tol).unwrap_or(f64::INFINITY)
    };
    if chart.dim() == 0 {
        return distance(space, p, &chart.param(0, &[]), tol);
    }
    let nodes = chart.quad_nodes(64);
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (comp, u, _) in nodes {
        let d = dist(comp, &u);
        if best.as_ref().map_or(true, |(_, _, bd)| d < *bd) {
            best = Some((comp, u, d));
        }
    }
    let (comp, mut u, mut bd) = best.unwrap();
    // golden-section per axis, several sweeps for multi-angle charts
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let step0 = 2.0 * PI / 64.0;
    for _sweep in 0..(2 * chart.dim()) {
        for axis in 0..chart.dim() {
            let (mut lo, mut hi) = (u[axis] - step0, u[axis] + step0);
            let eval = |x: f64, u: &[f64]| {
                let mut uu = u.to_vec();
                uu[axis] = x;
                dist(comp, &uu)
            };
            let mut c = hi - gr * (hi - lo);
            let mut d = lo + gr * (hi - lo);
            let (mut fc, mut fd) = (eval(c, &u), eval(d, &u));
            while hi - lo > tol.distance_refine {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - gr * (hi - lo);
                    fc = eval(c, &u);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + gr * (hi - lo);
                    fd = eval(d, &u);
                }
            }
            u[axis] = (lo + hi) / 2.0;
            bd = bd.min(dist(comp, &u));
        }
    }
    Ok(bd)
}

/// (min, max) of d(p, fiber2) over sampled p in fiber1.
pub fn equidistance_check<R: Rng + ?Sized>(
    fiber1: &FiberChart,
    fiber2: &FiberChart,
    samples: usize,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for _ in 0..samples {
        let p = fiber1.random_point(rng);
        let d = distance_to_fiber(&p, fiber2, tol)?;
        min = min.min(d);
        max = max.max(d);
    }
    Ok((min, max))
}

/// Sampled injectivity of a candidate separating set on the leaf space.
#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub margin: f64,
    pub violation: Option<(DVector<f64>, DVector<f64>)>,
    pub pairs: usize,
}

pub fn verify_separation<R: Rng + ?Sized>(
    rho: &[PolyFunction],
    sigma: &SubmetrySpec,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<SeparationReport> {
    // each candidate must be basic: constant on sampled fibers
    for (index, f) in rho.iter().enumerate() {
        for _ in 0..8 {
            let p = sigma.random_regular_point(rng);
            let chart = sigma.fiber_at(&p)?;
            let v0 = f.eval(&p);
            let mut spread: f64 = 0.0;
            for _ in 0..16 {
                spread = spread.max((f.eval(&chart.random_point(rng)) - v0).abs());
            }
            if spread > 1e-10 {
                return Err(Error::NotBasic { index, spread });
            }
        }
    }
    let mut margin = f64::INFINITY;
    let mut violation = None;
    let mut pairs = 0;
    let tols = Tolerances::default();
    for _ in 0..samples {
        let p = sigma.random_regular_point(rng);
        let q = sigma.random_regular_point(rng);
        // skip pairs on a common fiber
        let chart_p = sigma.fiber_at(&p)?;
        if chart_p.contains(&q, &tols) {
            continue;
        }
        // the fold identifies z and -z: same fiber iff same rho is not
        // enough; the chart membership test above is the fiber criterion
        pairs += 1;
        let sep = rho
            .iter()
            .map(|f| (f.eval(&p) - f.eval(&q)).abs())
            .fold(0.0, f64::max);
        if sep <= tol && violation.is_none() {
            violation = Some((p.clone(), q.clone()));
        }
        margin = margin.min(sep);
    }
    Ok(SeparationReport { margin, violation, pairs })
}

/// Largest coordinate of |rho(p) - rho(q)| for a declared witness pair;
/// used to exhibit separation counterexamples on known fibers.
pub fn separation_margin_at(
    rho: &[PolyFunction],
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> f64 {
    rho.iter()
        .map(|f| (f.eval(p) - f.eval(q)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, rint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn sub(id: &str) -> SubmetrySpec {
        SubmetrySpec::from_id(id).unwrap()
    }

    #[test]
    fn charts_land_on_space_and_quadrature_recovers_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tol = tols();
        for id in CATALOG_SUBMETRIES {
            let sigma = sub(id);
            for _ in 0..10 {
                let p = sigma.space.random_point(&mut rng);
                let chart = sigma.fiber_at(&p).unwrap();
                assert!(chart.contains(&p, &tol), "{id}: base point not on own fiber");
                for (comp, u, _) in chart.quad_nodes(8) {
                    let q = chart.param(comp, &u);
                    assert!(
                        sigma.space.embedding_residual(&q) < 1e-12,
                        "{id}: chart point off the space"
                    );
                }
                let vol_quad: f64 = chart.quad_nodes(32).iter().map(|(_, _, w)| w).sum();
                assert!((vol_quad - chart.volume()).abs() < 1e-10 * chart.volume().max(1.0));
            }
        }
    }

    #[test]
    fn fiber_partition_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tol = tols();
        for id in CATALOG_SUBMETRIES {
            let sigma = sub(id);
            for _ in 0..10 {
                let p = sigma.random_regular_point(&mut rng);
                let chart = sigma.fiber_at(&p).unwrap();
                let q = chart.random_point(&mut rng);
                // the fiber through q is the same fiber
                let chart_q = sigma.fiber_at(&q).unwrap();
                assert!(chart_q.contains(&p, &tol), "{id}: fibers do not partition");
                // rho is fiberwise constant
                let d = (sigma.rho_eval(&p) - sigma.rho_eval(&q)).norm();
                assert!(d < 1e-10, "{id}: rho varies on a fiber by {d}");
            }
        }
    }

    #[test]
    fn chart_derivative_identities() {
        // analytic chart derivatives agree with finite differences
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for id in CATALOG_SUBMETRIES {
            let sigma = sub(id);
            let p = sigma.random_regular_point(&mut rng);
            let chart = sigma.fiber_at(&p).unwrap();
            let dim = chart.dim();
            let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 2.0 * PI).collect();
            let h = 1e-5;
            for comp in 0..chart.n_components() {
                for a in 0..dim {
                    let mut up = u.clone();
                    let mut um = u.clone();
                    up[a] += h;
                    um[a] -= h;
                    let fd = (chart.param(comp, &up) - chart.param(comp, &um)) / (2.0 * h);
                    let an = chart.param_d1(comp, a, &u);
                    assert!((fd - &an).norm() < 1e-8, "{id}: d1 mismatch");
                    for b in 0..dim {
                        let mut upp = u.clone();
                        let mut umm = u.clone();
                        upp[b] += h;
                        umm[b] -= h;
                        let fd2 = (chart.param_d1_raw(comp, a, &upp)
                            - chart.param_d1_raw(comp, a, &umm))
                            / (2.0 * h);
                        let an2 = chart.param_d2(comp, a, b, &u);
                        assert!((fd2 - &an2).norm() < 1e-8, "{id}: d2 mismatch");
                    }
                }
            }
        }
    }

    #[test]
    fn latitude_average_of_x_squared() {
        let sigma = sub("s2-latitude");
        let f = PolyFunction::parse(&sigma.space, "1 x^2").unwrap();
        // exact backend: (1 - z^2)/2
        let g = average_function(&f, &sigma).unwrap();
        let expect = PolyFunction::parse(&sigma.space, "1/2 - 1/2 z^2").unwrap();
        assert_eq!(g, expect);
        // quadrature agrees at a fiber
        let p = DVector::from_vec(vec![(1.0f64 - 0.49).sqrt(), 0.0, 0.7]);
        let chart = sigma.fiber_at(&p).unwrap();
        assert!((average(&f, &chart) - (1.0 - 0.49) / 2.0).abs() < 1e-12);
        // basic input is fixed
        let z3 = PolyFunction::parse(&sigma.space, "1 z^3").unwrap();
        assert_eq!(average_function(&z3, &sigma).unwrap(), z3);
    }

    #[test]
    fn fold_average_kills_odd_part() {
        let sigma = sub("s2-fold");
        let z = PolyFunction::parse(&sigma.space, "1 z").unwrap();
        assert!(average_function(&z, &sigma).unwrap().is_zero());
        let p = DVector::from_vec(vec![(1.0f64 - 0.25).sqrt(), 0.0, 0.5]);
        let chart = sigma.fiber_at(&p).unwrap();
        assert!(average(&z, &chart).abs() < 1e-14);
        let z2 = PolyFunction::parse(&sigma.space, "1 z^2").unwrap();
        assert_eq!(average_function(&z2, &sigma).unwrap(), z2);
    }

    #[test]
    fn torus_average_freezes_first_circle() {
        let sigma = sub("t2-circles");
        let f = PolyFunction::parse(&sigma.space, "1 c1 c2^2 + 1 s2").unwrap();
        let g = average_function(&f, &sigma).unwrap();
        let expect = PolyFunction::parse(&sigma.space, "1/2 c1").unwrap();
        assert_eq!(g, expect);
    }

    #[test]
    fn averaging_is_idempotent_and_l2_projection() {
        use crate::polyfun::l2_inner;
        let sigma = sub("s2-latitude");
        let f = PolyFunction::parse(&sigma.space, "1 x^2 y^2 + 1 z x - 2 y").unwrap();
        let av = average_function(&f, &sigma).unwrap();
        assert_eq!(average_function(&av, &sigma).unwrap(), av);
        // f - Av f is L2-orthogonal to basic functions z^k
        for k in 0..=4u8 {
            let zk = reduce_canonical(
                &sigma.space,
                &Poly::monomial(3, vec![0, 0, k], num::One::one()),
            );
            let resid = f.sub(&av);
            assert!(l2_inner(&resid, &zk).is_zero(), "not orthogonal to z^{k}");
        }
    }

    #[test]
    fn exact_commutation_on_latitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = sub("s2-latitude");
        let f = PolyFunction::parse(&sigma.space, "1 x^2").unwrap();
        assert_eq!(commutator_residual(&f, &sigma, 10, &mut rng).unwrap(), 0.0);
        // check the displayed identity: Av(Delta x^2) = Delta((1-z^2)/2)
        let lhs = average_function(&laplace_beltrami(&f), &sigma).unwrap();
        let expect = PolyFunction::parse(&sigma.space, "1 - 3 z^2").unwrap();
        assert_eq!(lhs, expect);
    }

    #[test]
    fn hopf_averaging_and_commutation_numeric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma = sub("s3-hopf");
        // h1 is basic: averaging fixes it
        let h1 = PolyFunction::parse(&sigma.space, "1 x1^2 + 1 x2^2 - 1 x3^2 - 1 x4^2")
            .unwrap();
        let av = average_function_numeric(&h1, &sigma, 40, &mut rng).unwrap();
        assert_eq!(av.rationalized, h1);
        assert!(av.fit_residual < 1e-9);
        // commutator on a non-basic function
        let f = PolyFunction::parse(&sigma.space, "1 x1^4").unwrap();
        let resid = commutator_residual(&f, &sigma, 100, &mut rng).unwrap();
        assert!(resid < 1e-8, "hopf commutator residual {resid}");
    }

    #[test]
    fn latitude_mean_curvature_is_cot() {
        let tol = tols();
        let sigma = sub("s2-latitude");
        for phi in [0.4f64, 1.0, PI / 2.0, 2.2] {
            let p = DVector::from_vec(vec![phi.sin(), 0.0, phi.cos()]);
            let chart = sigma.fiber_at(&p).unwrap();
            let h = mean_curvature(&chart, &p, &tol).unwrap();
            let expect = (phi.cos() / phi.sin()).abs();
            assert!(
                (h.norm() - expect).abs() < 1e-12,
                "phi={phi}: |H|={} want {expect}",
                h.norm()
            );
            // points toward the nearer pole
            if phi < PI / 2.0 {
                assert!(h[2] > 0.0);
            } else if phi > PI / 2.0 {
                assert!(h[2] < 0.0);
            }
        }
    }

    #[test]
    fn hopf_fibers_are_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tol = tols();
        let sigma = sub("s3-hopf");
        for _ in 0..10 {
            let p = sigma.space.random_point(&mut rng);
            let chart = sigma.fiber_at(&p).unwrap();
            let h = mean_curvature(&chart, &p, &tol).unwrap();
            assert!(h.norm() < 1e-10, "Hopf fiber has |H| = {}", h.norm());
        }
    }

    #[test]
    fn clifford_shape_operator_and_trace() {
        let tol = tols();
        let sigma = sub("s3-clifford");
        for phi in [0.5f64, PI / 4.0, 1.1] {
            let (a, b) = (1.2f64, 2.3f64);
            let p = DVector::from_vec(vec![
                phi.cos() * a.cos(),
                phi.cos() * a.sin(),
                phi.sin() * b.cos(),
                phi.sin() * b.sin(),
            ]);
            let chart = sigma.fiber_at(&p).unwrap();
            // unit normal toward the first core circle (x3 = x4 = 0)
            let v = DVector::from_vec(vec![
                phi.sin() * a.cos(),
                phi.sin() * a.sin(),
                -phi.cos() * b.cos(),
                -phi.cos() * b.sin(),
            ]);
            let a_v = shape_operator(&chart, &p, &v, &tol).unwrap();
            let expect = phi.cos() / phi.sin() - phi.sin() / phi.cos();
            assert!(
                (a_v.trace() - expect).abs() < 1e-10,
                "phi={phi}: tr={} want {expect}",
                a_v.trace()
            );
            // principal curvatures are cot(phi) and -tan(phi)
            let eig = a_v.matrix.clone().symmetric_eigen().eigenvalues;
            let mut eg: Vec<f64> = eig.iter().cloned().collect();
            eg.sort_by(f64::total_cmp);
            let mut want = vec![phi.cos() / phi.sin(), -phi.sin() / phi.cos()];
            want.sort_by(f64::total_cmp);
            for (x, y) in eg.iter().zip(&want) {
                assert!((x - y).abs() < 1e-10);
            }
            // <H, v> = tr A_v
            let h = mean_curvature(&chart, &p, &tol).unwrap();
            assert!((h.dot(&v) - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_curvature_spreads_are_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tol = tols();
        for (id, seed_point) in [
            ("s2-latitude", DVector::from_vec(vec![(0.75f64).sqrt(), 0.0, 0.5])),
            ("s2-fold", DVector::from_vec(vec![(0.75f64).sqrt(), 0.0, 0.5])),
            ("s3-hopf", DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5])),
            (
                "s3-clifford",
                DVector::from_vec(vec![
                    (PI / 4.0).cos(),
                    0.0,
                    0.0,
                    (PI / 4.0).sin(),
                ]),
            ),
        ] {
            let sigma = sub(id);
            let chart = sigma.fiber_at(&seed_point).unwrap();
            let report =
                basic_mean_curvature_report(&sigma, &chart, 40, &tol, &mut rng).unwrap();
            assert!(report.spread <= 1e-6, "{id}: spread {}", report.spread);
        }
        // the minimal Clifford torus has vanishing pushed-forward H
        let sigma = sub("s3-clifford");
        let p = DVector::from_vec(vec![(PI / 4.0).cos(), 0.0, (PI / 4.0).sin(), 0.0]);
        let chart = sigma.fiber_at(&p).unwrap();
        let rep = basic_mean_curvature_report(&sigma, &chart, 20, &tol, &mut rng).unwrap();
        for v in &rep.pushed {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn rank_region_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s2 = SpaceModel::from_id("s2").unwrap();
        let z = PolyFunction::parse(&s2, "1 z").unwrap();
        let (m, _) = regular_rank_region(&[z.clone()], 100, &mut rng);
        assert_eq!(m, 1);
        // rank drops at the poles
        let gram = crate::polyfun::gram_entry(&z, &z);
        let pole = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(gram.eval(&pole).abs() < 1e-14);
        let sigma = sub("s3-hopf");
        let (m, flags) = regular_rank_region(&sigma.rho, 100, &mut rng);
        assert_eq!(m, 2);
        assert!(flags.iter().all(|(_, r)| *r == 2));
        let c = PolyFunction::constant(&s2, rat(3, 1));
        let (m, _) = regular_rank_region(&[c], 10, &mut rng);
        assert_eq!(m, 0);
    }

    #[test]
    fn induced_metric_constant_on_fibers_and_quotient_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma = sub("s2-latitude");
        let a = 0.6;
        let p = DVector::from_vec(vec![(1.0f64 - a * a).sqrt(), 0.0, a]);
        let chart = sigma.fiber_at(&p).unwrap();
        let rep = induced_metric_check(&sigma, &chart, 30, &mut rng).unwrap();
        assert!(rep.spread < 1e-12);
        assert!((rep.gram_value[(0, 0)] - (1.0 - a * a)).abs() < 1e-12);
        let len = rep.quotient_length.unwrap();
        assert!((len - PI).abs() < 1e-10, "quotient length {len}");
        // fold: Gram of z^2 is 4 a^2 (1 - a^2), equal on both components
        let sigma = sub("s2-fold");
        let chart = sigma.fiber_at(&p).unwrap();
        let rep = induced_metric_check(&sigma, &chart, 30, &mut rng).unwrap();
        assert!(rep.spread < 1e-12);
        assert!((rep.gram_value[(0, 0)] - 4.0 * a * a * (1.0 - a * a)).abs() < 1e-12);
        // hopf: 3x3 Gram constant on fibers
        let sigma = sub("s3-hopf");
        let q = sigma.random_regular_point(&mut rng);
        let chart = sigma.fiber_at(&q).unwrap();
        let rep = induced_metric_check(&sigma, &chart, 30, &mut rng).unwrap();
        assert!(rep.spread < 1e-10, "hopf Gram spread {}", rep.spread);
    }

    #[test]
    fn latitude_equidistance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tol = tols();
        let sigma = sub("s2-latitude");
        let (a, b) = (0.2f64, 0.7f64);
        let pa = DVector::from_vec(vec![(1.0 - a * a).sqrt(), 0.0, a]);
        let pb = DVector::from_vec(vec![(1.0 - b * b).sqrt(), 0.0, b]);
        let f1 = sigma.fiber_at(&pa).unwrap();
        let f2 = sigma.fiber_at(&pb).unwrap();
        let (min, max) = equidistance_check(&f1, &f2, 12, &tol, &mut rng).unwrap();
        let expect = (a.acos() - b.acos()).abs();
        assert!((min - expect).abs() < 1e-8, "min {min} want {expect}");
        assert!((max - expect).abs() < 1e-8, "max {max} want {expect}");
        // fiber vs itself
        let (min, max) = equidistance_check(&f1, &f1, 6, &tol, &mut rng).unwrap();
        assert!(min.abs() < 1e-9 && max.abs() < 1e-9);
    }

    #[test]
    fn hopf_fibers_equidistant_at_half_quotient_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tol = tols();
        let sigma = sub("s3-hopf");
        for _ in 0..4 {
            let p = sigma.space.random_point(&mut rng);
            let q = sigma.space.random_point(&mut rng);
            let f1 = sigma.fiber_at(&p).unwrap();
            let f2 = sigma.fiber_at(&q).unwrap();
            let (min, max) = equidistance_check(&f1, &f2, 10, &tol, &mut rng).unwrap();
            assert!(max - min <= 1e-8, "hopf equidistance spread {}", max - min);
            // distance is half the angle between the h-images on S^2(1/2)
            let u = sigma.rho_eval(&p).normalize();
            let w = sigma.rho_eval(&q).normalize();
            let expect = 0.5 * u.dot(&w).clamp(-1.0, 1.0).acos();
            assert!((min - expect).abs() < 1e-8, "hopf distance {min} want {expect}");
        }
    }

    #[test]
    fn separation_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let sigma = sub("s2-latitude");
        let z = PolyFunction::parse(&sigma.space, "1 z").unwrap();
        let rep = verify_separation(&[z], &sigma, 200, 1e-12, &mut rng).unwrap();
        assert!(rep.margin > 0.0 && rep.violation.is_none());
        // z^2 fails to separate the antipodal latitudes z = 1/2 and z = -1/2
        let z2 = PolyFunction::parse(&sigma.space, "1 z^2").unwrap();
        let p = DVector::from_vec(vec![(1.0f64 - 0.25).sqrt(), 0.0, 0.5]);
        let q = DVector::from_vec(vec![(1.0f64 - 0.25).sqrt(), 0.0, -0.5]);
        assert!(!sigma.fiber_at(&p).unwrap().contains(&q, &tols()));
        assert!(separation_margin_at(&[z2], &p, &q) < 1e-14);
        // hopf separating set
        let sigma = sub("s3-hopf");
        let rep = verify_separation(&sigma.rho.clone(), &sigma, 100, 1e-12, &mut rng).unwrap();
        assert!(rep.margin > 0.0 && rep.violation.is_none());
        // |h| = 1 exactly
        let h_sq = sigma.rho[0]
            .mul(&sigma.rho[0])
            .add(&sigma.rho[1].mul(&sigma.rho[1]))
            .add(&sigma.rho[2].mul(&sigma.rho[2]));
        assert_eq!(h_sq, PolyFunction::constant(&sigma.space, rint(1)));
    }

    #[test]
    fn non_basic_candidate_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let sigma = sub("s2-latitude");
        let x = PolyFunction::parse(&sigma.space, "1 x").unwrap();
        match verify_separation(&[x], &sigma, 10, 1e-12, &mut rng) {
            Err(Error::NotBasic { index: 0, .. }) => {}
            other => panic!("expected NotBasic, got {other:?}"),
        }
    }
}
