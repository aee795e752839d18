//! Closed-form differential geometry of the catalog spaces.
//!
//! Every catalog member is a finite product of unit spheres and unit circles,
//! embedded in Euclidean space factor by factor. Points and tangent vectors
//! are always ambient vectors; geodesics, parallel transport and the
//! curvature operator are closed-form per factor.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::Tolerances;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    /// Unit sphere S^{ambient-1} in R^ambient.
    Sphere { ambient: usize },
    /// Unit circle in R^2.
    Circle,
}

impl Factor {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Factor::Sphere { ambient } => *ambient,
            Factor::Circle => 2,
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Factor::Sphere { ambient } => ambient - 1,
            Factor::Circle => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceModel {
    pub id: String,
    pub factors: Vec<Factor>,
}

pub const CATALOG_SPACES: [&str; 5] = ["s2", "s3", "s4", "t2", "s2xs2"];

impl SpaceModel {
    pub fn from_id(id: &str) -> Result<SpaceModel> {
        let factors = match id {
            "s2" => vec![Factor::Sphere { ambient: 3 }],
            "s3" => vec![Factor::Sphere { ambient: 4 }],
            "s4" => vec![Factor::Sphere { ambient: 5 }],
            "t2" => vec![Factor::Circle, Factor::Circle],
            "s2xs2" => vec![Factor::Sphere { ambient: 3 }, Factor::Sphere { ambient: 3 }],
            _ => return Err(Error::UnknownSpace(id.to_string())),
        };
        Ok(SpaceModel { id: id.to_string(), factors })
    }

    pub fn ambient_dim(&self) -> usize {
        self.factors.iter().map(|f| f.ambient_dim()).sum()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.factors.iter().map(|f| f.intrinsic_dim()).sum()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.intrinsic_dim()
    }

    /// (factor, ambient coordinate range) pairs.
    pub fn blocks(&self) -> Vec<(Factor, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        let mut offset = 0;
        for f in &self.factors {
            let d = f.ambient_dim();
            out.push((f.clone(), offset..offset + d));
            offset += d;
        }
        out
    }

    /// Ambient coordinate names used by the polynomial text syntax.
    pub fn var_names(&self) -> Vec<String> {
        match self.id.as_str() {
            "s2" => vec!["x".into(), "y".into(), "z".into()],
            "t2" => vec!["c1".into(), "s1".into(), "c2".into(), "s2".into()],
            _ => (1..=self.ambient_dim()).map(|i| format!("x{i}")).collect(),
        }
    }

    /// Embedding residual: how far each factor block is from its unit sphere.
    pub fn embedding_residual(&self, p: &DVector<f64>) -> f64 {
        let mut res: f64 = 0.0;
        for (_, range) in self.blocks() {
            let norm2: f64 = range.clone().map(|i| p[i] * p[i]).sum();
            res = res.max((norm2 - 1.0).abs());
        }
        res
    }

    pub fn check_on_space(&self, p: &DVector<f64>, tol: &Tolerances) -> Result<()> {
        let residual = self.embedding_residual(p);
        if residual > tol.on_space.max(1e-10) {
            return Err(Error::OffSpace { residual });
        }
        Ok(())
    }

    /// Uniform random point (per-factor Gaussian normalization).
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut p = DVector::zeros(self.ambient_dim());
        for (_, range) in self.blocks() {
            let mut norm2 = 0.0;
            let vals: Vec<f64> = range
                .clone()
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    norm2 += g * g;
                    g
                })
                .collect();
            let n = norm2.sqrt();
            for (k, i) in range.enumerate() {
                p[i] = vals[k] / n;
            }
        }
        p
    }

    /// Random unit tangent vector at p.
    pub fn random_unit_tangent<R: Rng + ?Sized>(
        &self,
        p: &DVector<f64>,
        rng: &mut R,
    ) -> DVector<f64> {
        loop {
            let w = DVector::from_iterator(
                self.ambient_dim(),
                (0..self.ambient_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)),
            );
            let t = self.tangent_project_raw(p, &w);
            let n = t.norm();
            if n > 1e-8 {
                return t / n;
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto T_pM (no checks).
    pub fn tangent_project_raw(&self, p: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let mut out = w.clone();
        for (_, range) in self.blocks() {
            let dot: f64 = range.clone().map(|i| p[i] * w[i]).sum();
            for i in range {
                out[i] -= dot * p[i];
            }
        }
        out
    }

    /// An orthonormal basis of T_pM as ambient vectors.
    pub fn tangent_basis(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for i in 0..self.ambient_dim() {
            let mut e = DVector::zeros(self.ambient_dim());
            e[i] = 1.0;
            let mut v = self.tangent_project_raw(p, &e);
            for b in &basis {
                let d = v.dot(b);
                v -= b * d;
            }
            let n = v.norm();
            if n > 1e-10 {
                basis.push(v / n);
            }
        }
        debug_assert_eq!(basis.len(), self.intrinsic_dim());
        basis
    }
}

/// Orthogonal projection of `w` onto T_pM, with domain checks.
pub fn tangent_project(
    space: &SpaceModel,
    p: &DVector<f64>,
    w: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    space.check_on_space(p, tol)?;
    Ok(space.tangent_project_raw(p, w))
}

/// Per-factor decomposition of a velocity: speed and unit direction.
fn factor_velocity(
    p: &DVector<f64>,
    v: &DVector<f64>,
    range: &std::ops::Range<usize>,
) -> (f64, Vec<f64>) {
    let speed2: f64 = range.clone().map(|i| v[i] * v[i]).sum();
    let speed = speed2.sqrt();
    let dir: Vec<f64> = if speed > 1e-300 {
        range.clone().map(|i| v[i] / speed).collect()
    } else {
        range.clone().map(|_| 0.0).collect()
    };
    let _ = p;
    (speed, dir)
}

/// Unit-speed geodesic from (p, v) evaluated at time t.
pub fn geodesic_eval(
    space: &SpaceModel,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    space.check_on_space(p, tol)?;
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(geodesic_eval_raw(space, p, v, t))
}

pub fn geodesic_eval_raw(
    space: &SpaceModel,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    let mut out = p.clone();
    for (_, range) in space.blocks() {
        let (a, dir) = factor_velocity(p, v, &range);
        if a == 0.0 {
            continue;
        }
        let (s, c) = (a * t).sin_cos();
        for (k, i) in range.enumerate() {
            out[i] = c * p[i] + s * dir[k];
        }
    }
    out
}

/// Velocity c'(t) of the geodesic from (p, v).
pub fn geodesic_velocity(
    space: &SpaceModel,
    p: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    let mut out = DVector::zeros(space.ambient_dim());
    for (_, range) in space.blocks() {
        let (a, dir) = factor_velocity(p, v, &range);
        if a == 0.0 {
            continue;
        }
        let (s, c) = (a * t).sin_cos();
        for (k, i) in range.enumerate() {
            out[i] = a * (-s * p[i] + c * dir[k]);
        }
    }
    out
}

/// Parallel transport of the tangent vector `w` from c(0) to c(t) along the
/// geodesic from (p, v). Closed form: within each factor the component along
/// the direction of motion rotates with the geodesic, the rest is constant.
pub fn parallel_transport(
    space: &SpaceModel,
    p: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    let mut out = w.clone();
    for (_, range) in space.blocks() {
        let (a, dir) = factor_velocity(p, v, &range);
        if a == 0.0 {
            continue;
        }
        let beta: f64 = range
            .clone()
            .enumerate()
            .map(|(k, i)| w[i] * dir[k])
            .sum();
        let (s, c) = (a * t).sin_cos();
        for (k, i) in range.clone().enumerate() {
            // rotate the motion-aligned component, keep the rest
            out[i] = w[i] - beta * dir[k] + beta * (-s * p[i] + c * dir[k]);
        }
    }
    out
}

/// Geodesic distance on the product: square root of the sum of per-factor
/// squared distances (arccos on spheres, wrapped angle on circles).
pub fn distance(
    space: &SpaceModel,
    p: &DVector<f64>,
    q: &DVector<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    space.check_on_space(p, tol)?;
    space.check_on_space(q, tol)?;
    let mut sum2 = 0.0;
    for (factor, range) in space.blocks() {
        let dot: f64 = range.clone().map(|i| p[i] * q[i]).sum();
        let _ = factor;
        // acos loses absolute accuracy near dot = 1; the chord formula is
        // exact there (and both factor kinds are unit spheres ambiently)
        let d = if dot > 0.95 {
            let chord2: f64 = range.map(|i| (p[i] - q[i]) * (p[i] - q[i])).sum();
            2.0 * (chord2.sqrt() / 2.0).asin()
        } else {
            dot.clamp(-1.0, 1.0).acos()
        };
        sum2 += d * d;
    }
    Ok(sum2.sqrt())
}

/// A unit-speed geodesic ray.
#[derive(Clone, Debug)]
pub struct GeodesicRay {
    pub space: SpaceModel,
    pub p: DVector<f64>,
    pub v: DVector<f64>,
}

impl GeodesicRay {
    pub fn new(space: SpaceModel, p: DVector<f64>, v: DVector<f64>, tol: &Tolerances) -> Result<Self> {
        space.check_on_space(&p, tol)?;
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(GeodesicRay { space, p, v })
    }

    pub fn point(&self, t: f64) -> DVector<f64> {
        geodesic_eval_raw(&self.space, &self.p, &self.v, t)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        geodesic_velocity(&self.space, &self.p, &self.v, t)
    }

    pub fn transport(&self, w: &DVector<f64>, t: f64) -> DVector<f64> {
        parallel_transport(&self.space, &self.p, &self.v, w, t)
    }
}

/// Default orthonormal basis of {c'(0)}^perp inside T_pM.
pub fn normal_frame_at_start(ray: &GeodesicRay) -> Vec<DVector<f64>> {
    let mut frame = Vec::new();
    for cand in ray.space.tangent_basis(&ray.p) {
        let mut w = cand;
        let d = w.dot(&ray.v);
        w -= &ray.v * d;
        for f in &frame {
            let d = w.dot(f);
            w -= f * d;
        }
        let n = w.norm();
        if n > 1e-10 {
            frame.push(w / n);
        }
    }
    debug_assert_eq!(frame.len(), ray.space.intrinsic_dim() - 1);
    frame
}

/// Parallel frame along the ray: transports `frame0` (an orthonormal basis of
/// {c'(0)}^perp at t = 0) to time t.
pub fn normal_frame(ray: &GeodesicRay, frame0: &[DVector<f64>], t: f64) -> Vec<DVector<f64>> {
    frame0.iter().map(|w| ray.transport(w, t)).collect()
}

/// Curvature term of the Jacobi equation: R(w, c')c' for a single ambient
/// tangent vector at c(t). Per sphere factor R(J, c')c' = |c'|^2 J - <J, c'>c';
/// circle factors are flat.
pub fn curvature_apply(
    space: &SpaceModel,
    velocity: &DVector<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let mut out = DVector::zeros(space.ambient_dim());
    for (factor, range) in space.blocks() {
        if let Factor::Circle = factor {
            continue;
        }
        let speed2: f64 = range.clone().map(|i| velocity[i] * velocity[i]).sum();
        let dot: f64 = range.clone().map(|i| w[i] * velocity[i]).sum();
        for i in range {
            out[i] = speed2 * w[i] - dot * velocity[i];
        }
    }
    out
}

/// Symmetric matrix of the curvature operator J -> R(J, c')c' represented in
/// the given parallel frame at time t.
pub fn curvature_along(
    ray: &GeodesicRay,
    frame0: &[DVector<f64>],
    t: f64,
) -> DMatrix<f64> {
    let frame = normal_frame(ray, frame0, t);
    let vel = ray.velocity(t);
    let n = frame.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, fj) in frame.iter().enumerate() {
        let rj = curvature_apply(&ray.space, &vel, fj);
        for (k, fk) in frame.iter().enumerate() {
            m[(j, k)] = rj.dot(fk);
        }
    }
    // symmetrize away rounding
    for j in 0..n {
        for k in (j + 1)..n {
            let avg = 0.5 * (m[(j, k)] + m[(k, j)]);
            m[(j, k)] = avg;
            m[(k, j)] = avg;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn vecd(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn tangent_project_examples() {
        let s2 = SpaceModel::from_id("s2").unwrap();
        let p = vecd(&[0.0, 0.0, 1.0]);
        let t = tangent_project(&s2, &p, &vecd(&[1.0, 0.0, 5.0]), &tol()).unwrap();
        assert!((t - vecd(&[1.0, 0.0, 0.0])).norm() < 1e-15);
        let t = tangent_project(&s2, &p, &vecd(&[0.0, 0.0, 3.0]), &tol()).unwrap();
        assert!(t.norm() < 1e-15);

        let t2 = SpaceModel::from_id("t2").unwrap();
        let p = vecd(&[1.0, 0.0, 1.0, 0.0]);
        let t = tangent_project(&t2, &p, &vecd(&[1.0, 1.0, 0.0, 1.0]), &tol()).unwrap();
        assert!((t - vecd(&[0.0, 1.0, 0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn tangent_project_idempotent_and_rejects_off_space() {
        let s2 = SpaceModel::from_id("s2").unwrap();
        let p = vecd(&[0.6, 0.0, 0.8]);
        let w = vecd(&[1.0, 2.0, 3.0]);
        let t1 = tangent_project(&s2, &p, &w, &tol()).unwrap();
        let t2 = tangent_project(&s2, &p, &t1, &tol()).unwrap();
        assert!((t1 - t2).norm() < 1e-14);
        let off = vecd(&[0.0, 0.0, 1.5]);
        assert!(tangent_project(&s2, &off, &w, &tol()).is_err());
    }

    #[test]
    fn geodesic_quarter_circle_and_periodicity() {
        let s2 = SpaceModel::from_id("s2").unwrap();
        let p = vecd(&[0.0, 0.0, 1.0]);
        let v = vecd(&[1.0, 0.0, 0.0]);
        let q = geodesic_eval(&s2, &p, &v, std::f64::consts::FRAC_PI_2, &tol()).unwrap();
        assert!((q - vecd(&[1.0, 0.0, 0.0])).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let p = s2.random_point(&mut rng);
            let v = s2.random_unit_tangent(&p, &mut rng);
            let q = geodesic_eval(&s2, &p, &v, 2.0 * std::f64::consts::PI, &tol()).unwrap();
            assert!((q - p).norm() < 1e-12);
        }
    }

    #[test]
    fn geodesic_rejects_non_unit_velocity() {
        let s2 = SpaceModel::from_id("s2").unwrap();
        let p = vecd(&[0.0, 0.0, 1.0]);
        assert!(geodesic_eval(&s2, &p, &vecd(&[2.0, 0.0, 0.0]), 1.0, &tol()).is_err());
    }

    #[test]
    fn product_geodesic_split_speeds() {
        // speeds (1/sqrt2, 1/sqrt2): at t = sqrt2 * pi each factor has run pi
        let sp = SpaceModel::from_id("s2xs2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sp.random_point(&mut rng);
        let s = 1.0 / 2.0f64.sqrt();
        // build a velocity with per-factor speed s
        let mut v = DVector::zeros(6);
        for (_, range) in sp.blocks() {
            let pf = DVector::from_iterator(3, range.clone().map(|i| p[i]));
            let mut g = vecd(&[0.3, -0.7, 0.61]);
            let d = g.dot(&pf);
            g -= pf * d;
            g /= g.norm();
            for (k, i) in range.enumerate() {
                v[i] = s * g[k];
            }
        }
        let q = geodesic_eval(&sp, &p, &v, 2.0f64.sqrt() * std::f64::consts::PI, &tol()).unwrap();
        assert!((q + p).norm() < 1e-12, "each factor should reach its antipode");
    }

    #[test]
    fn distance_examples() {
        let s2 = SpaceModel::from_id("s2").unwrap();
        let p = vecd(&[0.0, 0.0, 1.0]);
        let d = distance(&s2, &p, &(-p.clone()), &tol()).unwrap();
        assert!((d - std::f64::consts::PI).abs() < 1e-14);
        let d = distance(&s2, &p, &vecd(&[1.0, 0.0, 0.0]), &tol()).unwrap();
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-14);

        // torus wrap-around: angles (0,0) vs (3pi/2, 0) are pi/2 apart
        let t2 = SpaceModel::from_id("t2").unwrap();
        let a = vecd(&[1.0, 0.0, 1.0, 0.0]);
        let th = 1.5 * std::f64::consts::PI;
        let b = vecd(&[th.cos(), th.sin(), 1.0, 0.0]);
        let d = distance(&t2, &a, &b, &tol()).unwrap();
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn geodesic_semigroup_property() {
        let tolr = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in CATALOG_SPACES {
            let sp = SpaceModel::from_id(id).unwrap();
            for _ in 0..10 {
                let p = sp.random_point(&mut rng);
                let v = sp.random_unit_tangent(&p, &mut rng);
                let (t, s) = (0.37, 0.91);
                let direct = geodesic_eval_raw(&sp, &p, &v, t + s);
                let mid = geodesic_eval_raw(&sp, &p, &v, t);
                let vmid = geodesic_velocity(&sp, &p, &v, t);
                let two_step = geodesic_eval_raw(&sp, &mid, &vmid, s);
                assert!(
                    (direct - two_step).norm() < tolr.geodesic_compose,
                    "semigroup violated on {id}"
                );
            }
        }
    }

    #[test]
    fn distance_matches_arclength() {
        let tolr = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for id in CATALOG_SPACES {
            let sp = SpaceModel::from_id(id).unwrap();
            for _ in 0..10 {
                let p = sp.random_point(&mut rng);
                let v = sp.random_unit_tangent(&p, &mut rng);
                // stay inside the injectivity radius of every catalog member
                let t = 0.1 + 0.8 * rng.gen::<f64>();
                let q = geodesic_eval_raw(&sp, &p, &v, t);
                let d = distance(&sp, &p, &q, &tolr).unwrap();
                assert!((d - t).abs() < tolr.distance_along, "{id}: d={d} t={t}");
            }
        }
    }

    #[test]
    fn frames_are_parallel_and_orthonormal() {
        let tolr = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for id in CATALOG_SPACES {
            let sp = SpaceModel::from_id(id).unwrap();
            let p = sp.random_point(&mut rng);
            let v = sp.random_unit_tangent(&p, &mut rng);
            let ray = GeodesicRay::new(sp.clone(), p, v, &tolr).unwrap();
            let frame0 = normal_frame_at_start(&ray);
            for &t in &[0.0, 0.8, 2.5] {
                let frame = normal_frame(&ray, &frame0, t);
                let vel = ray.velocity(t);
                for (j, fj) in frame.iter().enumerate() {
                    assert!(fj.dot(&vel).abs() < tolr.frame_orth * 10.0);
                    for (k, fk) in frame.iter().enumerate() {
                        let expect = if j == k { 1.0 } else { 0.0 };
                        assert!((fj.dot(fk) - expect).abs() < tolr.frame_orth);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_curvature_matrices() {
        let tolr = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // unit spheres: identity
        for id in ["s2", "s3", "s4"] {
            let sp = SpaceModel::from_id(id).unwrap();
            let p = sp.random_point(&mut rng);
            let v = sp.random_unit_tangent(&p, &mut rng);
            let ray = GeodesicRay::new(sp.clone(), p, v, &tolr).unwrap();
            let frame0 = normal_frame_at_start(&ray);
            let k = curvature_along(&ray, &frame0, 0.7);
            let n = frame0.len();
            assert!((k - DMatrix::identity(n, n)).norm() < 1e-12);
        }
        // flat torus: zero
        let sp = SpaceModel::from_id("t2").unwrap();
        let p = sp.random_point(&mut rng);
        let v = sp.random_unit_tangent(&p, &mut rng);
        let ray = GeodesicRay::new(sp.clone(), p, v, &tolr).unwrap();
        let frame0 = normal_frame_at_start(&ray);
        let k = curvature_along(&ray, &frame0, 1.3);
        assert!(k.norm() < 1e-13);
    }

    #[test]
    fn product_curvature_eigenvalues() {
        // diagonal geodesic on s2xs2 with speeds (a, b): the curvature matrix
        // has eigenvalues {a^2, b^2, 0}
        let tolr = tol();
        let sp = SpaceModel::from_id("s2xs2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = sp.random_point(&mut rng);
        let (a, b) = (0.6, 0.8);
        let mut v = DVector::zeros(6);
        for (fi, (_, range)) in sp.blocks().into_iter().enumerate() {
            let pf = DVector::from_iterator(3, range.clone().map(|i| p[i]));
            let mut g = DVector::from_row_slice(&[0.21, 0.9, -0.4]);
            let d = g.dot(&pf);
            g -= pf * d;
            g /= g.norm();
            let s = if fi == 0 { a } else { b };
            for (k, i) in range.enumerate() {
                v[i] = s * g[k];
            }
        }
        let ray = GeodesicRay::new(sp, p, v, &tolr).unwrap();
        let frame0 = normal_frame_at_start(&ray);
        let k = curvature_along(&ray, &frame0, 0.0);
        let mut eigs: Vec<f64> = k.symmetric_eigenvalues().iter().cloned().collect();
        eigs.sort_by(f64::total_cmp);
        assert!((eigs[0] - 0.0).abs() < 1e-12);
        assert!((eigs[1] - a * a).abs() < 1e-12);
        assert!((eigs[2] - b * b).abs() < 1e-12);
    }

    #[test]
    fn curvature_matches_finite_difference_jacobi_oracle() {
        // evolve two nearby geodesics, estimate J'' by finite differences in t,
        // and compare against -K J from the curvature operator
        let tolr = tol();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for id in CATALOG_SPACES {
            let sp = SpaceModel::from_id(id).unwrap();
            for _ in 0..4 {
                let p = sp.random_point(&mut rng);
                let v = sp.random_unit_tangent(&p, &mut rng);
                let ray = GeodesicRay::new(sp.clone(), p.clone(), v.clone(), &tolr).unwrap();
                let frame0 = normal_frame_at_start(&ray);
                if frame0.is_empty() {
                    continue;
                }
                let w = &frame0[rng.gen_range(0..frame0.len())];
                // geodesic variation with initial J(0) = 0, J'(0) = w
                let eps = 1e-4;
                let perturb = |sign: f64| {
                    let vv = &v + w * (sign * eps);
                    let n = vv.norm();
                    vv / n
                };
                let (vplus, vminus) = (perturb(1.0), perturb(-1.0));
                let jacobi = |t: f64| -> DVector<f64> {
                    let cp = geodesic_eval_raw(&sp, &p, &vplus, t);
                    let cm = geodesic_eval_raw(&sp, &p, &vminus, t);
                    (cp - cm) / (2.0 * eps)
                };
                let t0 = 0.9;
                let h = 5e-3;
                let second_diff = |h: f64| {
                    (jacobi(t0 + h) - jacobi(t0) * 2.0 + jacobi(t0 - h)) / (h * h)
                };
                // one Richardson step removes the h^2 truncation term
                let jpp = (second_diff(h) * 4.0 - second_diff(2.0 * h)) / 3.0;
                let j = sp.tangent_project_raw(&ray.point(t0), &jacobi(t0));
                let vel = ray.velocity(t0);
                let rj = curvature_apply(&sp, &vel, &j);
                // the tangential part of the ambient J'' equals the covariant
                // D^2 J minus a per-factor second-fundamental-form correction
                let mut correction = DVector::zeros(sp.ambient_dim());
                for (_, range) in sp.blocks() {
                    let dot: f64 = range.clone().map(|i| vel[i] * j[i]).sum();
                    for i in range {
                        correction[i] = dot * vel[i];
                    }
                }
                let jpp_tan = sp.tangent_project_raw(&ray.point(t0), &jpp);
                let resid = (jpp_tan + rj + correction).norm();
                assert!(resid < tolr.curvature_fd, "{id}: |D^2 J + R J| = {resid}");
            }
        }
    }
}
