//! Sparse Laurent polynomials over the rationals in interned atoms.

use super::atoms::AtomId;
use crate::rational::Q;
use smallvec::SmallVec;
use std::cmp::Ordering;

/// Sorted list of `(atom, nonzero exponent)`.
pub type Mono = SmallVec<[(AtomId, i32); 4]>;

/// Lexicographic order with smaller atom ids more significant.
pub fn lex_cmp(a: &[(AtomId, i32)], b: &[(AtomId, i32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(&(_, ex)), None) => return ex.cmp(&0),
            (None, Some(&(_, ey))) => return 0.cmp(&ey),
            (Some(&(x, ex)), Some(&(y, ey))) => {
                if x == y {
                    if ex != ey {
                        return ex.cmp(&ey);
                    }
                    i += 1;
                    j += 1;
                } else if x < y {
                    return ex.cmp(&0);
                } else {
                    return 0.cmp(&ey);
                }
            }
        }
    }
}

pub fn mono_mul(a: &[(AtomId, i32)], b: &[(AtomId, i32)]) -> Mono {
    let mut out = Mono::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, ex) = a[i];
        let (y, ey) = b[j];
        if x == y {
            let e = ex + ey;
            if e != 0 {
                out.push((x, e));
            }
            i += 1;
            j += 1;
        } else if x < y {
            out.push((x, ex));
            i += 1;
        } else {
            out.push((y, ey));
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn mono_inv(a: &[(AtomId, i32)]) -> Mono {
    a.iter().map(|&(x, e)| (x, -e)).collect()
}

pub fn mono_pow(a: &[(AtomId, i32)], k: i32) -> Mono {
    if k == 0 {
        return Mono::new();
    }
    a.iter().map(|&(x, e)| (x, e * k)).collect()
}

pub fn mono_exp(a: &[(AtomId, i32)], atom: AtomId) -> i32 {
    match a.binary_search_by(|p| p.0.cmp(&atom)) {
        Ok(k) => a[k].1,
        Err(_) => 0,
    }
}

/// Monomial with exponent of `atom` changed by `delta`.
pub fn mono_shift(a: &[(AtomId, i32)], atom: AtomId, delta: i32) -> Mono {
    mono_mul(a, &[(atom, delta)])
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    /// Terms in strictly decreasing `lex_cmp` order, nonzero coefficients.
    pub terms: Vec<(Mono, Q)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(Mono::new(), c)] }
        }
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn monomial(m: Mono, c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn atom(a: AtomId) -> Poly {
        Poly::monomial(smallvec::smallvec![(a, 1)], Q::one())
    }

    /// Sorts and combines arbitrary terms.
    pub fn from_terms(mut terms: Vec<(Mono, Q)>) -> Poly {
        terms.sort_by(|a, b| lex_cmp(&b.0, &a.0));
        let mut out: Vec<(Mono, Q)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 = &last.1 + &c;
                    continue;
                }
            }
            out.push((m, c));
        }
        out.retain(|t| !t.1.is_zero());
        Poly { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_empty())
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.terms.is_empty() {
            Some(Q::zero())
        } else if self.terms.len() == 1 && self.terms[0].0.is_empty() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.first()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < o.terms.len() {
            match lex_cmp(&self.terms[i].0, &o.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(o.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &o.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&o.terms[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }

    /// Multiplication by a monomial preserves the term order.
    pub fn mul_mono(&self, m: &[(AtomId, i32)], c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(n, d)| (mono_mul(n, m), d * c)).collect() }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if o.terms.len() == 1 {
            return self.mul_mono(&o.terms[0].0, &o.terms[0].1);
        }
        if self.terms.len() == 1 {
            return o.mul_mono(&self.terms[0].0, &self.terms[0].1);
        }
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (m, c) in &self.terms {
            for (n, d) in &o.terms {
                terms.push((mono_mul(m, n), c * d));
            }
        }
        Poly::from_terms(terms)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Componentwise minimum exponent over all terms (monomial content).
    pub fn monomial_content(&self) -> Mono {
        if self.terms.is_empty() {
            return Mono::new();
        }
        let mut atoms: Vec<AtomId> = self.terms.iter().flat_map(|(m, _)| m.iter().map(|p| p.0)).collect();
        atoms.sort_unstable();
        atoms.dedup();
        let mut out = Mono::new();
        for a in atoms {
            let e = self.terms.iter().map(|(m, _)| mono_exp(m, a)).min().unwrap();
            if e != 0 {
                out.push((a, e));
            }
        }
        out
    }

    /// Exact division by a polynomial; `None` if not divisible in the
    /// Laurent ring.
    pub fn div_exact(&self, b: &Poly) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        assert!(!b.is_zero());
        if b.terms.len() == 1 {
            let inv = mono_inv(&b.terms[0].0);
            return Some(self.mul_mono(&inv, &b.terms[0].1.inv()));
        }
        let shift_n = mono_inv(&self.monomial_content());
        let shift_b = mono_inv(&b.monomial_content());
        let mut rem = self.mul_mono(&shift_n, &Q::one());
        let bb = b.mul_mono(&shift_b, &Q::one());
        let (lb, lc) = bb.terms[0].clone();
        let lc_inv = lc.inv();
        let mut quot: Vec<(Mono, Q)> = Vec::new();
        while let Some((lm, c)) = rem.terms.first().cloned() {
            let t = mono_mul(&lm, &mono_inv(&lb));
            if t.iter().any(|&(_, e)| e < 0) {
                return None;
            }
            let tc = &c * &lc_inv;
            rem = rem.sub(&bb.mul_mono(&t, &tc));
            quot.push((t, tc));
        }
        let q = Poly { terms: quot };
        let back = mono_mul(&mono_inv(&shift_n), &shift_b);
        Some(q.mul_mono(&back, &Q::one()))
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        let mut v: Vec<AtomId> = self.terms.iter().flat_map(|(m, _)| m.iter().map(|p| p.0)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Degree in a single atom (max exponent), and min exponent.
    pub fn degree_range(&self, a: AtomId) -> (i32, i32) {
        let mut lo = i32::MAX;
        let mut hi = i32::MIN;
        for (m, _) in &self.terms {
            let e = mono_exp(m, a);
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo, hi)
    }

    /// Normalizes to a primitive polynomial with positive leading coefficient
    /// and no monomial content, returning `(unit, monomial, primitive)`.
    pub fn primitive_part(&self) -> (Q, Mono, Poly) {
        assert!(!self.is_zero());
        let content = self.monomial_content();
        let inv = mono_inv(&content);
        let shifted = self.mul_mono(&inv, &Q::one());
        let mut g = shifted.terms[0].1.abs();
        for (_, c) in &shifted.terms[1..] {
            g = crate::rational::content_gcd(&g, c);
        }
        if shifted.terms[0].1.is_negative() {
            g = -g;
        }
        let prim = shifted.scale(&g.inv());
        (g, content, prim)
    }
}

impl std::fmt::Debug for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poly{:?}", self.terms)
    }
}
