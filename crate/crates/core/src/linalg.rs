//! Exact linear algebra over the rationals.
//!
//! Vectors are sparse maps from an ordered key type to rational coefficients,
//! which lets polynomials and eigencomponent stacks share one span type.

use num::{One, Zero};
use std::collections::BTreeMap;

use crate::poly::Rat;

pub type SparseVec<K> = BTreeMap<K, Rat>;

/// Incrementally built row space with exact membership tests.
///
/// Rows are kept pivot-normalized; each row also records its expression in
/// terms of the vectors inserted so far, so membership queries return
/// coefficients over the original insertion order.
#[derive(Clone, Debug)]
pub struct SparseSpan<K: Ord + Clone> {
    rows: Vec<Row<K>>,
    n_inserted: usize,
}

#[derive(Clone, Debug)]
struct Row<K: Ord + Clone> {
    pivot: K,
    vec: SparseVec<K>,
    combo: Vec<Rat>, // coefficients over inserted vectors
}

impl<K: Ord + Clone> Default for SparseSpan<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone> SparseSpan<K> {
    pub fn new() -> Self {
        SparseSpan { rows: Vec::new(), n_inserted: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn n_inserted(&self) -> usize {
        self.n_inserted
    }

    /// Reduce `v` against the span. Returns the remainder and the
    /// coefficients (over inserted vectors) of the subtracted combination.
    pub fn reduce(&self, v: &SparseVec<K>) -> (SparseVec<K>, Vec<Rat>) {
        let mut rem = v.clone();
        let mut coeffs = vec![Rat::zero(); self.n_inserted];
        // rows are pivoted on their largest key; visiting them in
        // descending pivot order makes one pass sufficient
        for row in self.rows.iter().rev() {
            let c = match rem.get(&row.pivot) {
                Some(c) if !c.is_zero() => c.clone(),
                _ => continue,
            };
            for (k, rc) in &row.vec {
                let entry = rem.entry(k.clone()).or_insert_with(Rat::zero);
                *entry -= &c * rc;
                if entry.is_zero() {
                    rem.remove(k);
                }
            }
            for (i, rc) in row.combo.iter().enumerate() {
                coeffs[i] += &c * rc;
            }
        }
        (rem, coeffs)
    }

    /// Does `v` lie in the span? If so, return coefficients over the
    /// inserted vectors with `v = sum_i c_i v_i`.
    pub fn membership(&self, v: &SparseVec<K>) -> Option<Vec<Rat>> {
        let (rem, coeffs) = self.reduce(v);
        if rem.is_empty() {
            Some(coeffs)
        } else {
            None
        }
    }

    /// Insert a vector. Returns true if it enlarged the span.
    pub fn insert(&mut self, v: &SparseVec<K>) -> bool {
        let (mut rem, mut coeffs) = self.reduce(v);
        let idx = self.n_inserted;
        self.n_inserted += 1;
        for c in &mut coeffs {
            *c = -c.clone();
        }
        coeffs.push(Rat::one());
        // pad older rows' combos
        for row in &mut self.rows {
            row.combo.resize(self.n_inserted, Rat::zero());
        }
        if rem.is_empty() {
            return false;
        }
        // normalize to pivot coefficient 1 (largest key as pivot, so that
        // reduction subtracts leading terms first)
        let pivot = rem.keys().next_back().unwrap().clone();
        let pc = rem[&pivot].clone();
        for c in rem.values_mut() {
            *c /= &pc;
        }
        for c in &mut coeffs {
            *c /= &pc;
        }
        coeffs.resize(self.n_inserted, Rat::zero());
        // keep rows ordered by pivot so reduce() is a single pass
        let pos = self
            .rows
            .binary_search_by(|r| r.pivot.cmp(&pivot))
            .unwrap_err();
        self.rows.insert(pos, Row { pivot, vec: rem, combo: coeffs });
        // re-reduce earlier rows is unnecessary for membership correctness:
        // reduce() loops rows in pivot order and each row only needs its own
        // pivot eliminated from the query, but rows must not contain later
        // pivots with nonzero coefficient ahead of them. Full reduction keeps
        // the invariant simple:
        self.back_substitute(pos);
        let _ = idx;
        true
    }

    fn back_substitute(&mut self, new_pos: usize) {
        let new_row = self.rows[new_pos].clone();
        for i in 0..self.rows.len() {
            if i == new_pos {
                continue;
            }
            let c = match self.rows[i].vec.get(&new_row.pivot) {
                Some(c) if !c.is_zero() => c.clone(),
                _ => continue,
            };
            let row = &mut self.rows[i];
            for (k, rc) in &new_row.vec {
                let entry = row.vec.entry(k.clone()).or_insert_with(Rat::zero);
                *entry -= &c * rc;
                if entry.is_zero() {
                    row.vec.remove(k);
                }
            }
            for (j, rc) in new_row.combo.iter().enumerate() {
                let val = &c * rc;
                row.combo[j] -= val;
            }
        }
    }
}

/// Solve the square exact system `a * x = b` by Gaussian elimination.
/// Returns None when `a` is singular.
pub fn solve_exact(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let pc = m[col][col].clone();
        for c in col..=n {
            m[col][c] /= &pc;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            if f.is_zero() {
                continue;
            }
            for c in col..=n {
                let val = &f * &m[col][c];
                m[r][c] -= val;
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued fractions.
pub fn rationalize(x: f64, max_den: u64) -> Rat {
    use num::BigInt;
    if !x.is_finite() {
        return Rat::zero();
    }
    let neg = x < 0.0;
    let mut x = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e17 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 as u128 > max_den as u128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = x - a;
        if frac < 1e-13 {
            break;
        }
        x = 1.0 / frac;
    }
    let mut r = Rat::new(BigInt::from(p1), BigInt::from(q1.max(1)));
    if neg {
        r = -r;
    }
    r
}
