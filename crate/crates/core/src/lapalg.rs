//! Finitely generated subalgebras of the polynomial functions of a space:
//! Laplacian-closure certificates, Reynolds operators, and maximality
//! probes against a declared submetry.
//!
//! Membership is decided by exact linear algebra over the rationals inside
//! a degree filtration; no Groebner machinery.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{rationalize, solve_exact, SparseSpan, SparseVec};
use crate::poly::{rat_to_f64, Poly, Rat};
use crate::polyfun::{
    ensure_below_cutoff, eigenspace_basis, eigenvalues_below, l2_inner, laplace_beltrami,
    PolyFunction,
};
use crate::spaces::SpaceModel;
use crate::submetry::{average, SubmetrySpec};

type Key = (Rat, Vec<u8>);

/// A finitely generated subalgebra with a cached degree filtration.
#[derive(Clone, Debug)]
pub struct Subalgebra {
    pub space: SpaceModel,
    pub generators: Vec<PolyFunction>,
    pub cap: usize,
    basis: Vec<PolyFunction>,
    basis_degrees: Vec<usize>,
}

fn polyfun_from_sparse(space: &SpaceModel, v: &SparseVec<Key>) -> PolyFunction {
    let mut f = PolyFunction::zero(space);
    for ((lam, mono), c) in v {
        let entry = f
            .components
            .entry(lam.clone())
            .or_insert_with(|| Poly::zero(space.ambient_dim()));
        entry.add_term(mono.clone(), c.clone());
    }
    f.components.retain(|_, p| !p.is_zero());
    f
}

impl Subalgebra {
    /// Build the filtration: all products of generators with total ambient
    /// degree at most `cap`, reduced to a linearly independent basis in
    /// increasing degree order. Constants always belong.
    pub fn new(space: &SpaceModel, generators: Vec<PolyFunction>, cap: usize) -> Result<Self> {
        for g in &generators {
            if g.space.id != space.id {
                return Err(Error::SpaceMismatch(space.id.clone(), g.space.id.clone()));
            }
            if g.degree() > cap {
                return Err(Error::DegreeCap { requested: g.degree(), cap });
            }
        }
        let degs: Vec<usize> = generators.iter().map(|g| g.degree().max(1)).collect();
        // exponent vectors e with sum e_i deg_i <= cap
        let mut words: Vec<Vec<usize>> = vec![vec![0; generators.len()]];
        for (i, &d) in degs.iter().enumerate() {
            let mut next = Vec::new();
            for w in &words {
                let used: usize = w.iter().zip(&degs).map(|(e, d)| e * d).sum();
                let mut e = 0;
                while used + e * d <= cap {
                    let mut w2 = w.clone();
                    w2[i] = e;
                    next.push(w2);
                    e += 1;
                }
            }
            words = next;
        }
        words.sort_by_key(|w| w.iter().zip(&degs).map(|(e, d)| e * d).sum::<usize>());
        let mut span: SparseSpan<Key> = SparseSpan::new();
        let mut basis = Vec::new();
        let mut basis_degrees = Vec::new();
        for w in &words {
            let mut prod = PolyFunction::constant(space, Rat::from_integer(1.into()));
            for (i, &e) in w.iter().enumerate() {
                for _ in 0..e {
                    prod = prod.mul(&generators[i]);
                }
            }
            let deg: usize = w.iter().zip(&degs).map(|(e, d)| e * d).sum();
            if span.insert(&prod.to_sparse()) {
                basis.push(prod);
                basis_degrees.push(deg);
            }
        }
        Ok(Subalgebra { space: space.clone(), generators, cap, basis, basis_degrees })
    }

    pub fn parse(space: &SpaceModel, gens: &[&str], cap: usize) -> Result<Self> {
        let generators = gens
            .iter()
            .map(|g| PolyFunction::parse(space, g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, generators, cap)
    }

    /// Filtration basis up to an ambient degree.
    pub fn basis_up_to(&self, degree: usize) -> Vec<&PolyFunction> {
        self.basis
            .iter()
            .zip(&self.basis_degrees)
            .filter(|(_, &d)| d <= degree)
            .map(|(b, _)| b)
            .collect()
    }

    pub fn basis(&self) -> &[PolyFunction] {
        &self.basis
    }

    fn span_up_to(&self, degree: usize) -> (SparseSpan<Key>, Vec<&PolyFunction>) {
        let mut span = SparseSpan::new();
        let mut used = Vec::new();
        for b in self.basis_up_to(degree) {
            span.insert(&b.to_sparse());
            used.push(b);
        }
        (span, used)
    }

    /// Exact membership in the degree filtration, with coefficients over
    /// the filtration basis.
    pub fn membership(&self, f: &PolyFunction, degree: usize) -> Option<Vec<Rat>> {
        let (span, _) = self.span_up_to(degree);
        span.membership(&f.to_sparse())
    }

    pub fn contains(&self, f: &PolyFunction) -> bool {
        self.membership(f, self.cap).is_some()
    }

    /// Exact dimension of A intersect E_lambda inside the degree cap, valid
    /// for arbitrary (not necessarily Laplacian-closed) A: the kernel
    /// dimension of the projection killing the lambda-component.
    pub fn eigen_dim(&self, lambda: &Rat) -> usize {
        let mut span: SparseSpan<Key> = SparseSpan::new();
        let mut rank = 0;
        for b in &self.basis {
            let mut off = b.to_sparse();
            off.retain(|(l, _), _| l != lambda);
            if span.insert(&off) {
                rank += 1;
            }
        }
        self.basis.len() - rank
    }

    /// Exact basis of A intersect E_lambda from the filtration: the
    /// independent lambda-components of the filtration basis (valid because
    /// a Laplacian-closed algebra is the sum of its eigencomponents).
    pub fn eigen_slice(&self, lambda: &Rat) -> Vec<PolyFunction> {
        let mut span: SparseSpan<Key> = SparseSpan::new();
        let mut out = Vec::new();
        for b in &self.basis {
            if let Some(comp) = b.components.get(lambda) {
                let mut g = PolyFunction::zero(&self.space);
                g.components.insert(lambda.clone(), comp.clone());
                if span.insert(&g.to_sparse()) {
                    out.push(g);
                }
            }
        }
        out
    }
}

/// Outcome of the closure check: per-generator membership witnesses for
/// Delta(g), or the first counterexample with its unrepresentable residual.
#[derive(Clone, Debug)]
pub enum ClosureCertificate {
    Closed { witnesses: Vec<Vec<Rat>> },
    NotClosedWithinBound { generator: usize, residual: PolyFunction, bound: usize },
}

impl ClosureCertificate {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosureCertificate::Closed { .. })
    }
}

/// Decide exactly, generator by generator, whether Delta(g) lies in the
/// degree filtration up to `degree_bound`.
pub fn check_laplacian_closed(a: &Subalgebra, degree_bound: usize) -> Result<ClosureCertificate> {
    if degree_bound > a.cap {
        return Err(Error::DegreeCap { requested: degree_bound, cap: a.cap });
    }
    let (span, _) = a.span_up_to(degree_bound);
    let mut witnesses = Vec::new();
    for (i, g) in a.generators.iter().enumerate() {
        let lap = laplace_beltrami(g);
        let (rem, coeffs) = span.reduce(&lap.to_sparse());
        if rem.is_empty() {
            witnesses.push(coeffs);
        } else {
            return Ok(ClosureCertificate::NotClosedWithinBound {
                generator: i,
                residual: polyfun_from_sparse(&a.space, &rem),
                bound: degree_bound,
            });
        }
    }
    Ok(ClosureCertificate::Closed { witnesses })
}

/// Re-expand a closure witness against the filtration basis; used to audit
/// certificates.
pub fn expand_witness(a: &Subalgebra, degree_bound: usize, coeffs: &[Rat]) -> PolyFunction {
    let (_, used) = a.span_up_to(degree_bound);
    let mut out = PolyFunction::zero(&a.space);
    for (c, b) in coeffs.iter().zip(used) {
        if !c.is_zero() {
            out = out.add(&b.scale(c));
        }
    }
    out
}

/// The Reynolds operator of a Laplacian-closed subalgebra: eigenspace-wise
/// exact L2-orthogonal projection onto A.
pub fn reynolds(a: &Subalgebra, f: &PolyFunction, eigen_cutoff: &Rat) -> Result<PolyFunction> {
    ensure_below_cutoff(f, eigen_cutoff)?;
    let mut out = PolyFunction::zero(&a.space);
    for (lam, comp) in &f.components {
        let mut f_lam = PolyFunction::zero(&a.space);
        f_lam.components.insert(lam.clone(), comp.clone());
        let basis = a.eigen_slice(lam);
        if basis.is_empty() {
            continue;
        }
        let k = basis.len();
        let gram: Vec<Vec<Rat>> = (0..k)
            .map(|i| (0..k).map(|j| l2_inner(&basis[i], &basis[j])).collect())
            .collect();
        let rhs: Vec<Rat> = (0..k).map(|i| l2_inner(&basis[i], &f_lam)).collect();
        let coeffs = solve_exact(&gram, &rhs)
            .ok_or_else(|| Error::Config("degenerate Gram matrix in projection".into()))?;
        for (c, b) in coeffs.iter().zip(&basis) {
            if !c.is_zero() {
                out = out.add(&b.scale(c));
            }
        }
    }
    Ok(out)
}

/// Per-eigenvalue comparison of dim(A ∩ E_lambda) against the numerically
/// determined dimension of the basic part of E_lambda.
#[derive(Clone, Debug)]
pub struct LambdaProbe {
    pub lambda: f64,
    pub dim_algebra: usize,
    pub dim_basic: usize,
    /// a rationalized basic function certified (exactly) outside A, when
    /// the dimensions disagree
    pub mismatch: Option<PolyFunction>,
}

#[derive(Clone, Debug)]
pub struct MaximalityReport {
    pub per_lambda: Vec<LambdaProbe>,
}

impl MaximalityReport {
    pub fn pass(&self) -> bool {
        self.per_lambda
            .iter()
            .all(|p| p.dim_algebra == p.dim_basic)
    }
}

/// Probe maximality of A against the fibers of sigma: for each eigenvalue
/// up to the cutoff, compare the sigma-basic subspace of E_lambda with
/// A ∩ E_lambda.
pub fn maximality_probe<R: Rng + ?Sized>(
    a: &Subalgebra,
    sigma: &SubmetrySpec,
    eigen_cutoff: &Rat,
    rng: &mut R,
) -> Result<MaximalityReport> {
    let cutoff = rat_to_f64(eigen_cutoff);
    let mut per_lambda = Vec::new();
    for lam in eigenvalues_below(&a.space, cutoff, a.cap) {
        if lam.is_zero() {
            continue;
        }
        let basis = eigenspace_basis(&a.space, &lam, a.cap);
        let k = basis.len();
        if k == 0 {
            continue;
        }
        let m = 3 * k + 10;
        let mut pts = Vec::with_capacity(m);
        for _ in 0..m {
            pts.push(sigma.random_regular_point(rng));
        }
        // averaged basis values and raw basis values at the samples
        let v = DMatrix::from_fn(m, k, |i, j| basis[j].eval(&pts[i]));
        let mut av = DMatrix::zeros(m, k);
        for (i, p) in pts.iter().enumerate() {
            let chart = sigma.fiber_at(p)?;
            for (j, b) in basis.iter().enumerate() {
                av[(i, j)] = average(b, &chart);
            }
        }
        // coefficients of Av(b_j) over the basis: least squares V C = Av
        let svd_v = v.clone().svd(true, true);
        let mut c = DMatrix::zeros(k, k);
        for j in 0..k {
            let col = svd_v
                .solve(&av.column(j).into_owned(), 1e-12)
                .map_err(|e| Error::Config(e.to_string()))?;
            c.set_column(j, &col);
        }
        // rank of the averaged subspace, with an ambiguity guard; a top
        // singular value at noise scale means the basic part is trivial
        let sv = c.clone().svd(true, false);
        let top = sv.singular_values.iter().cloned().fold(0.0, f64::max);
        let dim_basic = if top < 1e-8 {
            0
        } else {
            let threshold = 1e-8 * top;
            for &s in sv.singular_values.iter() {
                if s > threshold / 10.0 && s < threshold * 10.0 {
                    return Err(Error::RankInconclusive {
                        lambda: rat_to_f64(&lam),
                        sv: s,
                        threshold,
                    });
                }
            }
            sv.singular_values.iter().filter(|&&s| s > threshold).count()
        };
        let dim_algebra = a.eigen_dim(&lam);
        let mut mismatch = None;
        if dim_basic != dim_algebra {
            // exhibit a basic function outside A: rationalize the left
            // singular vectors of the averaged subspace and test exact
            // membership in the filtration
            let u_mat = sv.u.as_ref().unwrap();
            for idx in 0..dim_basic {
                let col = u_mat.column(idx);
                let scale = col
                    .iter()
                    .cloned()
                    .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                    .unwrap_or(1.0);
                let mut g = PolyFunction::zero(&a.space);
                for (j, b) in basis.iter().enumerate() {
                    let coef = rationalize(col[j] / scale, 1_000_000);
                    if !coef.is_zero() {
                        g = g.add(&b.scale(&coef));
                    }
                }
                if !a.contains(&g) {
                    mismatch = Some(g);
                    break;
                }
            }
        }
        per_lambda.push(LambdaProbe {
            lambda: rat_to_f64(&lam),
            dim_algebra,
            dim_basic,
            mismatch,
        });
    }
    Ok(MaximalityReport { per_lambda })
}

use num::Zero;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, rint};
    use crate::polyfun::monomials_up_to;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s2() -> SpaceModel {
        SpaceModel::from_id("s2").unwrap()
    }

    #[test]
    fn zonal_algebra_is_closed() {
        let sp = s2();
        let a = Subalgebra::parse(&sp, &["1 z"], 8).unwrap();
        let cert = check_laplacian_closed(&a, 8).unwrap();
        match &cert {
            ClosureCertificate::Closed { witnesses } => {
                // Delta z = 2z: witness re-expands exactly
                let expanded = expand_witness(&a, 8, &witnesses[0]);
                let z = PolyFunction::parse(&sp, "1 z").unwrap();
                assert_eq!(expanded, laplace_beltrami(&z));
                assert_eq!(expanded, z.scale(&rint(2)));
            }
            _ => panic!("expected closed"),
        }
    }

    #[test]
    fn hopf_algebra_is_closed() {
        let sp = SpaceModel::from_id("s3").unwrap();
        let gens = [
            "1 x1^2 + 1 x2^2 - 1 x3^2 - 1 x4^2",
            "2 x1 x3 + 2 x2 x4",
            "2 x1 x4 - 2 x2 x3",
        ];
        let a = Subalgebra::parse(&sp, &gens, 8).unwrap();
        let cert = check_laplacian_closed(&a, 8).unwrap();
        match &cert {
            ClosureCertificate::Closed { witnesses } => {
                for (w, g) in witnesses.iter().zip(&a.generators) {
                    // Delta h_i = 8 h_i
                    assert_eq!(expand_witness(&a, 8, w), g.scale(&rint(8)));
                }
            }
            _ => panic!("expected closed"),
        }
    }

    #[test]
    fn z_cubed_fails_closure_naming_z() {
        let sp = s2();
        let a = Subalgebra::parse(&sp, &["1 z^3"], 9).unwrap();
        match check_laplacian_closed(&a, 9).unwrap() {
            ClosureCertificate::NotClosedWithinBound { generator, residual, bound } => {
                assert_eq!(generator, 0);
                assert_eq!(bound, 9);
                // Delta z^3 = 12 z^3 - 6 z, and z is not in span{1, z^3, z^6, z^9};
                // the residual is supported on the lambda = 2 zonal line
                assert!(residual.components.contains_key(&rint(2)));
                let z = PolyFunction::parse(&sp, "1 z").unwrap();
                let lam2 = residual.components.get(&rint(2)).unwrap();
                let zc = z.components.get(&rint(2)).unwrap();
                let ratio = lam2.terms.values().next().unwrap()
                    / zc.terms.values().next().unwrap();
                assert_eq!(residual.components.len(), 1);
                assert_eq!(*lam2, zc.scale(&ratio));
            }
            _ => panic!("expected not closed"),
        }
    }

    #[test]
    fn degree_bound_exceeding_cap_is_a_config_error() {
        let sp = s2();
        let a = Subalgebra::parse(&sp, &["1 z"], 6).unwrap();
        assert!(matches!(
            check_laplacian_closed(&a, 7),
            Err(Error::DegreeCap { .. })
        ));
    }

    #[test]
    fn reynolds_examples() {
        let sp = s2();
        let a = Subalgebra::parse(&sp, &["1 z"], 8).unwrap();
        let cutoff = rint(100);
        // fixes A elementwise
        let z3 = PolyFunction::parse(&sp, "1 z^3").unwrap();
        assert_eq!(reynolds(&a, &z3, &cutoff).unwrap(), z3);
        // constants
        let one = PolyFunction::constant(&sp, rint(1));
        assert_eq!(reynolds(&a, &one, &cutoff).unwrap(), one);
        // x^2 -> (1 - z^2)/2
        let x2 = PolyFunction::parse(&sp, "1 x^2").unwrap();
        let expect = PolyFunction::parse(&sp, "1/2 - 1/2 z^2").unwrap();
        assert_eq!(reynolds(&a, &x2, &cutoff).unwrap(), expect);
        // idempotent
        let img = reynolds(&a, &x2, &cutoff).unwrap();
        assert_eq!(reynolds(&a, &img, &cutoff).unwrap(), img);
        // cutoff guard
        assert!(matches!(
            reynolds(&a, &x2, &rint(2)),
            Err(Error::CutoffExceeded { .. })
        ));
    }

    #[test]
    fn reynolds_identity_and_self_adjointness() {
        let sp = s2();
        let cutoff = rint(200);
        for gens in [vec!["1 z"], vec!["1 z^2"]] {
            let a = Subalgebra::parse(&sp, &gens, 8).unwrap();
            let a_basis: Vec<PolyFunction> =
                a.basis_up_to(4).into_iter().cloned().collect();
            let ambient: Vec<PolyFunction> = monomials_up_to(3, 4)
                .into_iter()
                .map(|e| {
                    crate::polyfun::reduce_canonical(
                        &sp,
                        &Poly::monomial(3, e, num::One::one()),
                    )
                })
                .collect();
            for av in &a_basis {
                for b in &ambient {
                    let lhs = reynolds(&a, &av.mul(b), &cutoff).unwrap();
                    let rhs = av.mul(&reynolds(&a, b, &cutoff).unwrap());
                    assert_eq!(lhs, rhs, "Reynolds identity failed");
                }
            }
            // self-adjoint on a small sample
            let f = PolyFunction::parse(&sp, "1 x^2 y - 1 z^2").unwrap();
            let g = PolyFunction::parse(&sp, "1 y^2 + 1 x z").unwrap();
            let pf = reynolds(&a, &f, &cutoff).unwrap();
            let pg = reynolds(&a, &g, &cutoff).unwrap();
            assert_eq!(l2_inner(&pf, &g), l2_inner(&f, &pg));
        }
    }

    #[test]
    fn reynolds_agrees_with_averaging() {
        use crate::submetry::average_function;
        let sp = s2();
        let sigma = SubmetrySpec::from_id("s2-latitude").unwrap();
        let a = Subalgebra::parse(&sp, &["1 z"], 8).unwrap();
        let cutoff = rint(200);
        for text in ["1 x^2", "1 x^2 y^2", "1 z x^2 - 2 y^2", "1 z^3"] {
            let f = PolyFunction::parse(&sp, text).unwrap();
            let via_reynolds = reynolds(&a, &f, &cutoff).unwrap();
            let via_average = average_function(&f, &sigma).unwrap();
            assert_eq!(via_reynolds, via_average, "{text}");
        }
    }

    #[test]
    fn maximality_probe_agreements() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sp = s2();
        let cutoff = rint(30);
        let sigma = SubmetrySpec::from_id("s2-latitude").unwrap();
        let a = Subalgebra::parse(&sp, &["1 z"], 5).unwrap();
        let rep = maximality_probe(&a, &sigma, &cutoff, &mut rng).unwrap();
        assert!(rep.pass(), "zonal algebra should pass: {:?}", rep.per_lambda);
        // every realized eigenvalue carries exactly the zonal line
        for p in &rep.per_lambda {
            assert_eq!(p.dim_algebra, 1, "lambda {}", p.lambda);
            assert_eq!(p.dim_basic, 1);
        }
        let sigma = SubmetrySpec::from_id("s2-fold").unwrap();
        let a = Subalgebra::parse(&sp, &["1 z^2"], 6).unwrap();
        let rep = maximality_probe(&a, &sigma, &cutoff, &mut rng).unwrap();
        assert!(rep.pass(), "fold algebra should pass: {:?}", rep.per_lambda);
    }

    #[test]
    fn maximality_probe_exhibits_nonmaximality_of_z_cubed() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let sp = s2();
        let sigma = SubmetrySpec::from_id("s2-latitude").unwrap();
        // fibers of the latitude foliation are the level sets of z, hence
        // of the level partition of <z^3> as well
        let a = Subalgebra::parse(&sp, &["1 z^3"], 6).unwrap();
        let rep = maximality_probe(&a, &sigma, &rint(6), &mut rng).unwrap();
        assert!(!rep.pass());
        let probe2 = rep
            .per_lambda
            .iter()
            .find(|p| (p.lambda - 2.0).abs() < 1e-9)
            .unwrap();
        assert_eq!(probe2.dim_basic, 1);
        assert_eq!(probe2.dim_algebra, 0);
        // the exhibited basic function is (a multiple of) z
        let g = probe2.mismatch.as_ref().unwrap();
        let z = PolyFunction::parse(&sp, "1 z").unwrap();
        let c = g.components[&rint(2)].terms.values().next().unwrap().clone();
        assert_eq!(*g, z.scale(&c));
    }

    #[test]
    fn field_of_fractions_regression() {
        let sp = s2();
        // <z^2, z^3> contains z^2 and z^3 but not their quotient z; the
        // Laplacian-closed <z> does contain it
        let a2 = Subalgebra::parse(&sp, &["1 z^2", "1 z^3"], 8).unwrap();
        let z = PolyFunction::parse(&sp, "1 z").unwrap();
        let z2 = PolyFunction::parse(&sp, "1 z^2").unwrap();
        let z3 = PolyFunction::parse(&sp, "1 z^3").unwrap();
        assert!(a2.contains(&z2));
        assert!(a2.contains(&z3));
        assert!(!a2.contains(&z));
        let a1 = Subalgebra::parse(&sp, &["1 z"], 8).unwrap();
        assert!(a1.contains(&z));
        // and <z^2> alone does not contain z^3
        let afold = Subalgebra::parse(&sp, &["1 z^2"], 8).unwrap();
        assert!(!afold.contains(&z3));
    }

    #[test]
    fn filtration_is_nested_and_contains_constants() {
        let sp = s2();
        let a = Subalgebra::parse(&sp, &["1 z^2"], 8).unwrap();
        let one = PolyFunction::constant(&sp, rat(7, 2));
        assert!(a.membership(&one, 0).is_some());
        let mut prev = 0;
        for d in 0..=8 {
            let n = a.basis_up_to(d).len();
            assert!(n >= prev);
            prev = n;
        }
        assert_eq!(a.basis_up_to(8).len(), 5); // 1, z^2, z^4, z^6, z^8
    }
}
