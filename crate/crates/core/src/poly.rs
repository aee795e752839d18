//! Multivariate polynomials with exact rational coefficients.
//!
//! Exponent vectors index ambient coordinates of a catalog space. The text
//! syntax accepted by [`Poly::parse`] ("3/2 x1^2 x3 - 1 x2") is part of the
//! CLI contract.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Rational n/d from machine integers.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    pub nvars: usize,
    /// exponent vector -> coefficient; zero coefficients are never stored
    pub terms: BTreeMap<Vec<u8>, Rat>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Rat::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0u8; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, Rat::one());
        p
    }

    pub fn monomial(nvars: usize, exps: Vec<u8>, c: Rat) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn add_term(&mut self, exps: Vec<u8>, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        let mut out = Poly::zero(self.nvars);
        for (e, k) in &self.terms {
            out.terms.insert(e.clone(), k * c);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to variable i.
    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * rint(e[i] as i64));
            }
        }
        out
    }

    /// Sum of second partials over the listed variables.
    pub fn laplacian_over(&self, vars: std::ops::Range<usize>) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for i in vars {
            out = out.add(&self.partial(i).partial(i));
        }
        out
    }

    /// Re-index a local polynomial into a larger variable set at `offset`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Poly {
        let mut out = Poly::zero(nvars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0u8; nvars];
            e2[offset..offset + e.len()].copy_from_slice(e);
            out.terms.insert(e2, c.clone());
        }
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = rat_to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_rat(&self, x: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn gradient_ambient(&self) -> Vec<Poly> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Render using the given variable names.
    pub fn to_text(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        // highest degree first, then lexicographic, for stable readable output
        let mut terms: Vec<(&Vec<u8>, &Rat)> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: usize = a.0.iter().map(|&x| x as usize).sum();
            let db: usize = b.0.iter().map(|&x| x as usize).sum();
            db.cmp(&da).then(a.0.cmp(b.0))
        });
        for (idx, (e, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    out.push_str("- ");
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let _ = write!(out, "{}", mag);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                out.push(' ');
                out.push_str(&names[i]);
                if k > 1 {
                    let _ = write!(out, "^{}", k);
                }
            }
        }
        out
    }

    /// Parse the plain-text monomial syntax, e.g. "3/2 x1^2 x3 - 1 x2".
    ///
    /// Variable names are resolved through `names`; coefficients are exact
    /// rationals (`3`, `3/2`, `-1`). A term without an explicit coefficient
    /// has coefficient 1.
    pub fn parse(input: &str, names: &[String]) -> Result<Poly> {
        let nvars = names.len();
        let err = |msg: &str| Error::PolyParse {
            input: input.to_string(),
            msg: msg.to_string(),
        };
        let name_index = |tok: &str| names.iter().position(|n| n == tok);

        let mut p = Poly::zero(nvars);
        let mut tokens = tokenize(input).map_err(|m| err(&m))?;
        if tokens.is_empty() {
            return Ok(p);
        }
        tokens.reverse(); // pop from the front
        let mut sign = 1i64;
        loop {
            // optional leading sign for this term
            while let Some(tok) = tokens.last() {
                match tok.as_str() {
                    "+" => {
                        tokens.pop();
                    }
                    "-" => {
                        sign = -sign;
                        tokens.pop();
                    }
                    _ => break,
                }
            }
            if tokens.is_empty() {
                if sign != 1 {
                    return Err(err("dangling sign"));
                }
                break;
            }
            let mut coeff = rint(sign);
            sign = 1;
            let mut exps = vec![0u8; nvars];
            let mut saw_factor = false;
            while let Some(tok) = tokens.last().cloned() {
                if tok == "+" || tok == "-" {
                    break;
                }
                tokens.pop();
                if tok == "*" {
                    continue;
                }
                if tok.chars().next().is_some_and(|c| c.is_ascii_digit()) {
                    let c = parse_rat(&tok).ok_or_else(|| err("bad coefficient"))?;
                    coeff *= c;
                    saw_factor = true;
                    continue;
                }
                // variable, possibly with ^k
                let (base, exp) = match tok.split_once('^') {
                    Some((b, e)) => {
                        let k: u8 = e.parse().map_err(|_| err("bad exponent"))?;
                        (b.to_string(), k)
                    }
                    None => (tok.clone(), 1),
                };
                let i = name_index(&base)
                    .ok_or_else(|| err(&format!("unknown variable `{base}`")))?;
                exps[i] += exp;
                saw_factor = true;
            }
            if !saw_factor {
                return Err(err("empty term"));
            }
            p.add_term(exps, coeff);
            if tokens.is_empty() {
                break;
            }
        }
        Ok(p)
    }
}

fn parse_rat(tok: &str) -> Option<Rat> {
    match tok.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rat::new(n, d))
        }
        None => {
            let n: BigInt = tok.parse().ok()?;
            Some(Rat::from_integer(n))
        }
    }
}

fn tokenize(input: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in input.chars() {
        match ch {
            ' ' | '\t' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            '+' | '-' | '*' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '^' || c == '/' || c == '.' => {
                if c == '.' {
                    return Err("decimal coefficients are not accepted; use exact rationals".into());
                }
                cur.push(c);
            }
            c => return Err(format!("unexpected character `{c}`")),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names3() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    #[test]
    fn parse_roundtrip() {
        let p = Poly::parse("3/2 x^2 z - 1 y", &names3()).unwrap();
        assert_eq!(p.terms.len(), 2);
        let s = p.to_text(&names3());
        let q = Poly::parse(&s, &names3()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_implicit_coefficient() {
        let p = Poly::parse("x1^2 + x2^2 - x3^2 - x4^2", &(1..=4).map(|i| format!("x{i}")).collect::<Vec<_>>()).unwrap();
        assert_eq!(p.terms.len(), 4);
        assert_eq!(p.eval_f64(&[1.0, 0.0, 0.0, 0.0]), 1.0);
        assert_eq!(p.eval_f64(&[0.0, 0.0, 1.0, 0.0]), -1.0);
    }

    #[test]
    fn mul_and_partial() {
        let names = names3();
        let p = Poly::parse("x + y", &names).unwrap();
        let q = p.mul(&p);
        assert_eq!(q, Poly::parse("x^2 + 2 x y + y^2", &names).unwrap());
        assert_eq!(q.partial(0), Poly::parse("2 x + 2 y", &names).unwrap());
    }

    #[test]
    fn parse_rejects_unknown_var() {
        assert!(Poly::parse("w^2", &names3()).is_err());
    }
}
