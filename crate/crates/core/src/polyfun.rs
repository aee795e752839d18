//! Exact arithmetic for the algebraic functions of a catalog space.
//!
//! A function is stored in canonical form: a finite list of Laplace--Beltrami
//! eigencomponents, each an ambient polynomial that restricts from a product
//! of per-factor harmonics (sphere factors) and trigonometric characters
//! (circle factors). The canonical form makes the Laplacian diagonal and
//! equality-on-the-space decidable.

use num::{BigInt, One, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{SparseSpan, SparseVec};
use crate::poly::{rat_to_f64, rint, Poly, Rat};
use crate::spaces::{Factor, SpaceModel};

/// An exact algebraic function on a catalog space, in canonical form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyFunction {
    pub space: SpaceModel,
    /// eigenvalue -> eigencomponent; empty map is the zero function
    pub components: BTreeMap<Rat, Poly>,
}

/// Tangential gradient of a PolyFunction, one ambient polynomial per
/// ambient coordinate.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub space: SpaceModel,
    pub components: Vec<Poly>,
}

// ---------------------------------------------------------------------------
// per-factor harmonic decomposition
// ---------------------------------------------------------------------------

/// Decompose a local monomial on a sphere factor S^{N-1} into harmonic parts.
///
/// Peels the decomposition P = sum_j r^{2j} H_{k-2j} from the top using
/// iterated ambient Laplacians and the identity
/// Delta(r^{2j} H_m) = 2j(2j + N - 2 + 2m) r^{2j-2} H_m.
/// Returns (harmonic degree m, restricted representative H_m).
fn sphere_monomial_decompose(ambient: usize, exps: &[u8]) -> Vec<(u64, Poly)> {
    let nv = ambient;
    let k: usize = exps.iter().map(|&e| e as usize).sum();
    let r2 = {
        let mut p = Poly::zero(nv);
        for i in 0..nv {
            let mut e = vec![0u8; nv];
            e[i] = 2;
            p.add_term(e, Rat::one());
        }
        p
    };
    let mut rem = Poly::monomial(nv, exps.to_vec(), Rat::one());
    let mut out = Vec::new();
    while !rem.is_zero() {
        // iterated ambient Laplacians of the remainder
        let mut powers = vec![rem.clone()];
        loop {
            let next = powers.last().unwrap().laplacian_over(0..nv);
            if next.is_zero() {
                break;
            }
            powers.push(next);
        }
        let s = powers.len() - 1;
        let m = k - 2 * s;
        let mut c = Rat::one();
        for j in 1..=s {
            c *= rint((2 * j * (2 * j + nv - 2 + 2 * m)) as i64);
        }
        let h = powers[s].scale(&(Rat::one() / c));
        out.push((m as u64, h.clone()));
        rem = rem.sub(&r2.pow(s).mul(&h));
    }
    out
}

/// Trigonometric expansion of c^a s^b on the circle: frequency -> (cos, sin)
/// coefficients, all exact rationals.
fn circle_trig_expand(a: u8, b: u8) -> BTreeMap<u32, (Rat, Rat)> {
    let mut t: BTreeMap<u32, (Rat, Rat)> = BTreeMap::new();
    t.insert(0, (Rat::one(), Rat::zero()));
    let half = Rat::new(BigInt::from(1), BigInt::from(2));
    let mul_cos = |t: &BTreeMap<u32, (Rat, Rat)>| -> BTreeMap<u32, (Rat, Rat)> {
        let mut out: BTreeMap<u32, (Rat, Rat)> = BTreeMap::new();
        let mut add = |k: i64, c: Rat, s: Rat| {
            let (kk, c, s) = if k < 0 { ((-k) as u32, c, -s) } else { (k as u32, c, s) };
            let e = out.entry(kk).or_insert_with(|| (Rat::zero(), Rat::zero()));
            e.0 += c;
            e.1 += s;
        };
        for (&k, (ck, sk)) in t {
            // cos k cos 1 = (cos(k+1) + cos(k-1))/2 ; sin k cos 1 = (sin(k+1)+sin(k-1))/2
            add(k as i64 + 1, ck * &half, sk * &half);
            add(k as i64 - 1, ck * &half, sk * &half);
        }
        out
    };
    let mul_sin = |t: &BTreeMap<u32, (Rat, Rat)>| -> BTreeMap<u32, (Rat, Rat)> {
        let mut out: BTreeMap<u32, (Rat, Rat)> = BTreeMap::new();
        let mut add = |k: i64, c: Rat, s: Rat| {
            let (kk, c, s) = if k < 0 { ((-k) as u32, c, -s) } else { (k as u32, c, s) };
            let e = out.entry(kk).or_insert_with(|| (Rat::zero(), Rat::zero()));
            e.0 += c;
            e.1 += s;
        };
        for (&k, (ck, sk)) in t {
            // cos k sin 1 = (sin(k+1) - sin(k-1))/2 ; sin k sin 1 = (cos(k-1)-cos(k+1))/2
            add(k as i64 + 1, Rat::zero(), ck * &half);
            add(k as i64 - 1, Rat::zero(), -(ck * &half));
            add(k as i64 - 1, sk * &half, Rat::zero());
            add(k as i64 + 1, -(sk * &half), Rat::zero());
        }
        out
    };
    for _ in 0..a {
        t = mul_cos(&t);
    }
    for _ in 0..b {
        t = mul_sin(&t);
    }
    t.retain(|_, (c, s)| !c.is_zero() || !s.is_zero());
    t
}

/// Chebyshev representatives: cos(k theta) = T_k(c), sin(k theta) = s U_{k-1}(c).
fn chebyshev_t(k: u32) -> Poly {
    // local vars (c, s)
    let c = Poly::var(2, 0);
    let mut t0 = Poly::one(2);
    if k == 0 {
        return t0;
    }
    let mut t1 = c.clone();
    for _ in 1..k {
        let t2 = c.mul(&t1).scale(&rint(2)).sub(&t0);
        t0 = t1;
        t1 = t2;
    }
    t1
}

fn chebyshev_u(k: u32) -> Poly {
    let c = Poly::var(2, 0);
    let mut u0 = Poly::one(2);
    if k == 0 {
        return u0;
    }
    let mut u1 = c.scale(&rint(2));
    for _ in 1..k {
        let u2 = c.mul(&u1).scale(&rint(2)).sub(&u0);
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// Decompose a local monomial c^a s^b on the circle into characters.
/// Returns (frequency k, restricted representative), eigenvalue k^2.
fn circle_monomial_decompose(a: u8, b: u8) -> Vec<(u64, Poly)> {
    let trig = circle_trig_expand(a, b);
    let s = Poly::var(2, 1);
    let mut out = Vec::new();
    for (k, (ck, sk)) in trig {
        let mut p = chebyshev_t(k).scale(&ck);
        if k >= 1 && !sk.is_zero() {
            p = p.add(&s.mul(&chebyshev_u(k - 1)).scale(&sk));
        }
        if !p.is_zero() {
            out.push((k as u64, p));
        }
    }
    out
}

type FactorKey = (bool /*sphere*/, usize /*ambient*/, Vec<u8>);

fn decomp_cache() -> &'static Mutex<HashMap<FactorKey, Vec<(Rat, Poly)>>> {
    static CACHE: OnceLock<Mutex<HashMap<FactorKey, Vec<(Rat, Poly)>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached per-factor monomial decomposition, as (eigenvalue, local poly).
fn factor_monomial_decompose(factor: &Factor, exps: &[u8]) -> Vec<(Rat, Poly)> {
    let key: FactorKey = (
        matches!(factor, Factor::Sphere { .. }),
        factor.ambient_dim(),
        exps.to_vec(),
    );
    if let Some(hit) = decomp_cache().lock().unwrap().get(&key) {
        return hit.clone();
    }
    let value: Vec<(Rat, Poly)> = match factor {
        Factor::Sphere { ambient } => sphere_monomial_decompose(*ambient, exps)
            .into_iter()
            .map(|(m, p)| {
                let lambda = rint((m * (m + *ambient as u64 - 2)) as i64);
                (lambda, p)
            })
            .collect(),
        Factor::Circle => circle_monomial_decompose(exps[0], exps[1])
            .into_iter()
            .map(|(k, p)| (rint((k * k) as i64), p))
            .collect(),
    };
    decomp_cache()
        .lock()
        .unwrap()
        .insert(key, value.clone());
    value
}

// ---------------------------------------------------------------------------
// canonical forms
// ---------------------------------------------------------------------------

/// Reduce an ambient polynomial to canonical eigen-decomposed form.
pub fn reduce_canonical(space: &SpaceModel, poly: &Poly) -> PolyFunction {
    let nv = space.ambient_dim();
    assert_eq!(poly.nvars, nv, "polynomial has wrong variable count for {}", space.id);
    let blocks = space.blocks();
    let mut components: BTreeMap<Rat, Poly> = BTreeMap::new();
    for (exps, coeff) in &poly.terms {
        // per-factor local monomials
        let mut partials: Vec<(Rat, Poly)> = vec![(Rat::zero(), Poly::constant(nv, coeff.clone()))];
        for (factor, range) in &blocks {
            let local: Vec<u8> = exps[range.clone()].to_vec();
            let fdec = factor_monomial_decompose(factor, &local);
            let mut next = Vec::with_capacity(partials.len() * fdec.len());
            for (lam, acc) in &partials {
                for (flam, fpoly) in &fdec {
                    let lifted = fpoly.embed(nv, range.start);
                    next.push((lam + flam, acc.mul(&lifted)));
                }
            }
            partials = next;
        }
        for (lam, p) in partials {
            if p.is_zero() {
                continue;
            }
            let entry = components.entry(lam).or_insert_with(|| Poly::zero(nv));
            *entry = entry.add(&p);
        }
    }
    components.retain(|_, p| !p.is_zero());
    PolyFunction { space: space.clone(), components }
}

impl PolyFunction {
    pub fn zero(space: &SpaceModel) -> Self {
        PolyFunction { space: space.clone(), components: BTreeMap::new() }
    }

    pub fn constant(space: &SpaceModel, c: Rat) -> Self {
        let mut components = BTreeMap::new();
        if !c.is_zero() {
            components.insert(Rat::zero(), Poly::constant(space.ambient_dim(), c));
        }
        PolyFunction { space: space.clone(), components }
    }

    /// Parse the text syntax and canonicalize.
    pub fn parse(space: &SpaceModel, text: &str) -> Result<Self> {
        let poly = Poly::parse(text, &space.var_names())?;
        Ok(reduce_canonical(space, &poly))
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Sum of components: the canonical ambient representative.
    pub fn total_poly(&self) -> Poly {
        let mut p = Poly::zero(self.space.ambient_dim());
        for comp in self.components.values() {
            p = p.add(comp);
        }
        p
    }

    pub fn add(&self, other: &PolyFunction) -> PolyFunction {
        self.check_space(other);
        let mut components = self.components.clone();
        for (lam, p) in &other.components {
            let entry = components
                .entry(lam.clone())
                .or_insert_with(|| Poly::zero(self.space.ambient_dim()));
            *entry = entry.add(p);
        }
        components.retain(|_, p| !p.is_zero());
        PolyFunction { space: self.space.clone(), components }
    }

    pub fn sub(&self, other: &PolyFunction) -> PolyFunction {
        self.add(&other.scale(&rint(-1)))
    }

    pub fn scale(&self, c: &Rat) -> PolyFunction {
        if c.is_zero() {
            return PolyFunction::zero(&self.space);
        }
        let components = self
            .components
            .iter()
            .map(|(lam, p)| (lam.clone(), p.scale(c)))
            .collect();
        PolyFunction { space: self.space.clone(), components }
    }

    pub fn mul(&self, other: &PolyFunction) -> PolyFunction {
        self.check_space(other);
        reduce_canonical(&self.space, &self.total_poly().mul(&other.total_poly()))
    }

    pub fn eval(&self, p: &DVector<f64>) -> f64 {
        let x: Vec<f64> = p.iter().cloned().collect();
        self.components.values().map(|c| c.eval_f64(&x)).sum()
    }

    /// Largest eigenvalue present, as f64 (0 for the zero function).
    pub fn max_eigenvalue(&self) -> f64 {
        self.components
            .keys()
            .last()
            .map(rat_to_f64)
            .unwrap_or(0.0)
    }

    /// Total ambient degree of the canonical representative.
    pub fn degree(&self) -> usize {
        self.components.values().map(|p| p.degree()).max().unwrap_or(0)
    }

    fn check_space(&self, other: &PolyFunction) {
        assert_eq!(
            self.space.id, other.space.id,
            "PolyFunction spaces must match"
        );
    }

    /// Flatten to a sparse vector keyed by (eigenvalue, monomial), for exact
    /// linear algebra.
    pub fn to_sparse(&self) -> SparseVec<(Rat, Vec<u8>)> {
        let mut out = SparseVec::new();
        for (lam, p) in &self.components {
            for (e, c) in &p.terms {
                out.insert((lam.clone(), e.clone()), c.clone());
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.total_poly().to_text(&self.space.var_names())
    }
}

/// The Laplace--Beltrami operator on canonical forms: multiplies each
/// eigencomponent by its eigenvalue.
pub fn laplace_beltrami(f: &PolyFunction) -> PolyFunction {
    let components: BTreeMap<Rat, Poly> = f
        .components
        .iter()
        .filter(|(lam, _)| !lam.is_zero())
        .map(|(lam, p)| {
            let mut scaled = Poly::zero(p.nvars);
            for (e, c) in &p.terms {
                scaled.add_term(e.clone(), c * lam);
            }
            (lam.clone(), scaled)
        })
        .collect();
    PolyFunction { space: f.space.clone(), components }
}

/// Canonical-form list (eigenvalue, component).
pub fn eigen_decompose(f: &PolyFunction) -> Vec<(Rat, Poly)> {
    f.components
        .iter()
        .map(|(l, p)| (l.clone(), p.clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// exact L^2 inner products
// ---------------------------------------------------------------------------

fn double_factorial(n: i64) -> BigInt {
    // (-1)!! = 1 by convention
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= BigInt::from(k);
        k -= 2;
    }
    acc
}

/// Normalized moment of a single monomial over one factor.
fn factor_moment(factor: &Factor, exps: &[u8]) -> Rat {
    if exps.iter().any(|&e| e % 2 == 1) {
        return Rat::zero();
    }
    match factor {
        Factor::Sphere { ambient } => {
            let n = *ambient as i64;
            let total: i64 = exps.iter().map(|&e| e as i64).sum();
            let s = total / 2;
            let mut num = BigInt::one();
            for &e in exps {
                num *= double_factorial(e as i64 - 1);
            }
            let mut den = BigInt::one();
            for j in 0..s {
                den *= BigInt::from(n + 2 * j);
            }
            Rat::new(num, den)
        }
        Factor::Circle => {
            let (a, b) = (exps[0] as i64, exps[1] as i64);
            let num = double_factorial(a - 1) * double_factorial(b - 1);
            let den = double_factorial(a + b);
            Rat::new(num, den)
        }
    }
}

/// Exact normalized integral of an ambient polynomial over the space.
pub fn moment(space: &SpaceModel, poly: &Poly) -> Rat {
    let blocks = space.blocks();
    let mut acc = Rat::zero();
    for (exps, coeff) in &poly.terms {
        let mut m = coeff.clone();
        for (factor, range) in &blocks {
            let local: Vec<u8> = exps[range.clone()].to_vec();
            let fm = factor_moment(factor, &local);
            if fm.is_zero() {
                m = Rat::zero();
                break;
            }
            m *= fm;
        }
        acc += m;
    }
    acc
}

/// Exact L^2 inner product, normalized so <1, 1> = 1.
pub fn l2_inner(f: &PolyFunction, g: &PolyFunction) -> Rat {
    assert_eq!(f.space.id, g.space.id, "l2_inner requires a common space");
    moment(&f.space, &f.total_poly().mul(&g.total_poly()))
}

// ---------------------------------------------------------------------------
// gradients
// ---------------------------------------------------------------------------

/// Tangential gradient as ambient polynomials: per factor block, the ambient
/// gradient minus its radial component.
pub fn gradient(f: &PolyFunction) -> GradientField {
    let space = &f.space;
    let p = f.total_poly();
    let nv = space.ambient_dim();
    let partials: Vec<Poly> = (0..nv).map(|i| p.partial(i)).collect();
    let mut components = Vec::with_capacity(nv);
    for (_, range) in space.blocks() {
        // radial component sum_j x_j dP/dx_j within the block
        let mut radial = Poly::zero(nv);
        for j in range.clone() {
            radial = radial.add(&Poly::var(nv, j).mul(&partials[j]));
        }
        for i in range {
            components.push(partials[i].sub(&Poly::var(nv, i).mul(&radial)));
        }
    }
    GradientField { space: space.clone(), components }
}

impl GradientField {
    pub fn eval(&self, p: &DVector<f64>) -> DVector<f64> {
        let x: Vec<f64> = p.iter().cloned().collect();
        DVector::from_iterator(
            self.components.len(),
            self.components.iter().map(|c| c.eval_f64(&x)),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}

/// Exact Gram matrix of tangential gradients:
/// <grad f, grad g> = (f Lap(g) + g Lap(f) - Lap(fg)) / 2.
pub fn gram_gradients(rho: &[PolyFunction]) -> Vec<Vec<PolyFunction>> {
    let k = rho.len();
    let mut out: Vec<Vec<PolyFunction>> = vec![vec![]; k];
    for i in 0..k {
        for j in 0..k {
            if j < i {
                let prev = out[j][i].clone();
                out[i].push(prev);
                continue;
            }
            out[i].push(gram_entry(&rho[i], &rho[j]));
        }
    }
    out
}

/// Single Gram entry <grad f, grad g> as a PolyFunction.
pub fn gram_entry(f: &PolyFunction, g: &PolyFunction) -> PolyFunction {
    let half = Rat::new(BigInt::from(1), BigInt::from(2));
    let a = f.mul(&laplace_beltrami(g));
    let b = g.mul(&laplace_beltrami(f));
    let c = laplace_beltrami(&f.mul(g));
    a.add(&b).sub(&c).scale(&half)
}

// ---------------------------------------------------------------------------
// eigenspace bases
// ---------------------------------------------------------------------------

/// All distinct Laplace--Beltrami eigenvalues of the space not exceeding
/// `cutoff` that are realized by polynomials of ambient degree <= `maxdeg`.
pub fn eigenvalues_below(space: &SpaceModel, cutoff: f64, maxdeg: usize) -> Vec<Rat> {
    // accumulate per-factor eigenvalues by degree, then sum over factors
    let mut sums: Vec<(u64, usize)> = vec![(0, 0)]; // (lambda, degree used)
    for factor in &space.factors {
        let mut next = Vec::new();
        for &(lam, used) in &sums {
            match factor {
                Factor::Sphere { ambient } => {
                    let n = *ambient as u64;
                    for k in 0..=(maxdeg - used) as u64 {
                        let l = k * (k + n - 2);
                        if (lam + l) as f64 <= cutoff {
                            next.push((lam + l, used + k as usize));
                        }
                    }
                }
                Factor::Circle => {
                    for k in 0..=(maxdeg - used) as u64 {
                        let l = k * k;
                        if (lam + l) as f64 <= cutoff {
                            next.push((lam + l, used + k as usize));
                        }
                    }
                }
            }
        }
        sums = next;
    }
    let mut vals: Vec<u64> = sums.into_iter().map(|(l, _)| l).collect();
    vals.sort_unstable();
    vals.dedup();
    vals.into_iter().map(|l| rint(l as i64)).collect()
}

/// Exact basis of the eigenspace E_lambda realized by ambient polynomials of
/// degree <= maxdeg, as canonical single-component PolyFunctions.
pub fn eigenspace_basis(space: &SpaceModel, lambda: &Rat, maxdeg: usize) -> Vec<PolyFunction> {
    let nv = space.ambient_dim();
    let mut span: SparseSpan<(Rat, Vec<u8>)> = SparseSpan::new();
    let mut basis = Vec::new();
    for exps in monomials_up_to(nv, maxdeg) {
        let f = reduce_canonical(space, &Poly::monomial(nv, exps, Rat::one()));
        if let Some(comp) = f.components.get(lambda) {
            let mut g = PolyFunction::zero(space);
            g.components.insert(lambda.clone(), comp.clone());
            let v = g.to_sparse();
            if v.is_empty() {
                continue;
            }
            if span.insert(&v) {
                basis.push(g);
            }
        }
    }
    basis
}

/// All exponent vectors with total degree <= maxdeg.
pub fn monomials_up_to(nvars: usize, maxdeg: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; nvars];
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, idx: usize, left: usize) {
        if idx == cur.len() {
            out.push(cur.clone());
            return;
        }
        for d in 0..=left {
            cur[idx] = d as u8;
            rec(out, cur, idx + 1, left - d);
        }
        cur[idx] = 0;
    }
    rec(&mut out, &mut cur, 0, maxdeg);
    out.sort_by_key(|e| {
        (
            e.iter().map(|&x| x as usize).sum::<usize>(),
            e.clone(),
        )
    });
    out
}

/// All exponent vectors with total degree exactly `deg`.
pub fn monomials_of_degree(nvars: usize, deg: usize) -> Vec<Vec<u8>> {
    monomials_up_to(nvars, deg)
        .into_iter()
        .filter(|e| e.iter().map(|&x| x as usize).sum::<usize>() == deg)
        .collect()
}

/// Relative eigenvalue cutoff error type helper.
pub fn ensure_below_cutoff(f: &PolyFunction, cutoff: &Rat) -> Result<()> {
    for lam in f.components.keys() {
        if lam > cutoff {
            return Err(Error::CutoffExceeded {
                lambda: rat_to_f64(lam),
                cutoff: rat_to_f64(cutoff),
            });
        }
    }
    Ok(())
}
