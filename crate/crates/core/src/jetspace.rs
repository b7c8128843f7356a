//! Differential polynomials on the jet space, with optional localization at
//! first-order jets and logarithms `ℓ_j = log u^j_x`.

use crate::coefffield::CoeffExpr;
use crate::localops::MatDiffOp;
use crate::rational::Q;
use smallvec::SmallVec;
use std::collections::BTreeMap;
use std::fmt;

/// Packed jet variable: component in the high bits, derivative order in the
/// low six bits; order 63 encodes `log u^j_x`.
pub type JetVar = u16;

const ORDER_BITS: u16 = 6;
const LOG_ORDER: u16 = 63;
pub const MAX_JET_ORDER: u32 = 62;

#[inline]
pub fn jet_var(comp: usize, order: u32) -> JetVar {
    assert!((1..=MAX_JET_ORDER).contains(&order), "jet order out of range");
    ((comp as u16) << ORDER_BITS) | order as u16
}

#[inline]
pub fn log_var(comp: usize) -> JetVar {
    ((comp as u16) << ORDER_BITS) | LOG_ORDER
}

#[inline]
pub fn var_comp(v: JetVar) -> usize {
    (v >> ORDER_BITS) as usize
}

/// Derivative order, or `None` for a log generator.
#[inline]
pub fn var_order(v: JetVar) -> Option<u32> {
    let o = v & ((1 << ORDER_BITS) - 1);
    if o == LOG_ORDER {
        None
    } else {
        Some(o as u32)
    }
}

pub type JetMono = SmallVec<[(JetVar, i32); 4]>;

fn jm_mul(a: &[(JetVar, i32)], b: &[(JetVar, i32)]) -> JetMono {
    let mut out = JetMono::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, ex) = a[i];
        let (y, ey) = b[j];
        if x == y {
            if ex + ey != 0 {
                out.push((x, ex + ey));
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

fn jm_exp(a: &[(JetVar, i32)], v: JetVar) -> i32 {
    a.iter().find(|p| p.0 == v).map(|p| p.1).unwrap_or(0)
}

/// Differential degree of a jet monomial (logs count zero).
pub fn mono_degree(m: &[(JetVar, i32)]) -> i32 {
    m.iter().map(|&(v, e)| var_order(v).map(|o| o as i32 * e).unwrap_or(0)).sum()
}

/// A finite sum of `CoeffExpr × jet monomial`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct JetPoly {
    terms: BTreeMap<JetMono, CoeffExpr>,
}

impl JetPoly {
    pub fn zero() -> JetPoly {
        JetPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: CoeffExpr) -> JetPoly {
        let mut p = JetPoly::zero();
        if !c.is_zero() {
            p.terms.insert(JetMono::new(), c);
        }
        p
    }

    pub fn one() -> JetPoly {
        JetPoly::constant(CoeffExpr::one())
    }

    pub fn int(n: i64) -> JetPoly {
        JetPoly::constant(CoeffExpr::int(n))
    }

    /// Field variable `u^(comp+1)` (jet order zero).
    pub fn u(comp: usize) -> JetPoly {
        JetPoly::constant(CoeffExpr::var(comp))
    }

    /// Jet variable `u^(comp+1)_(order)`; order zero gives the field variable.
    pub fn jet(comp: usize, order: u32) -> JetPoly {
        if order == 0 {
            return JetPoly::u(comp);
        }
        JetPoly::monomial(smallvec::smallvec![(jet_var(comp, order), 1)], CoeffExpr::one())
    }

    pub fn log_ux(comp: usize) -> JetPoly {
        JetPoly::monomial(smallvec::smallvec![(log_var(comp), 1)], CoeffExpr::one())
    }

    pub fn monomial(m: JetMono, c: CoeffExpr) -> JetPoly {
        let mut p = JetPoly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (JetMono, CoeffExpr)>) -> JetPoly {
        let mut p = JetPoly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: JetMono, c: CoeffExpr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                let s = old.add(&c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&JetMono, &CoeffExpr)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient if the polynomial is jet-free.
    pub fn as_coeff(&self) -> Option<CoeffExpr> {
        if self.terms.is_empty() {
            return Some(CoeffExpr::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&JetMono::new()) {
                return Some(c.clone());
            }
        }
        None
    }

    /// Coefficient of the jet-free monomial.
    pub fn jet_free_part(&self) -> CoeffExpr {
        self.terms.get(&JetMono::new()).cloned().unwrap_or_else(CoeffExpr::zero)
    }

    pub fn coeff_of(&self, m: &[(JetVar, i32)]) -> CoeffExpr {
        let key: JetMono = m.iter().copied().collect();
        self.terms.get(&key).cloned().unwrap_or_else(CoeffExpr::zero)
    }

    pub fn add(&self, o: &JetPoly) -> JetPoly {
        let (mut big, small) = if self.terms.len() >= o.terms.len() { (self.clone(), o) } else { (o.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub fn add_assign(&mut self, o: &JetPoly) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn neg(&self) -> JetPoly {
        JetPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, o: &JetPoly) -> JetPoly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.neg());
        }
        r
    }

    pub fn scale(&self, c: &CoeffExpr) -> JetPoly {
        if c.is_zero() {
            return JetPoly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        let mut out = JetPoly::zero();
        for (m, d) in &self.terms {
            out.add_term(m.clone(), d.mul(c));
        }
        out
    }

    pub fn scale_q(&self, c: &Q) -> JetPoly {
        if c.is_zero() {
            return JetPoly::zero();
        }
        JetPoly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d.scale(c))).collect() }
    }

    pub fn mul(&self, o: &JetPoly) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            for (n, d) in &o.terms {
                out.add_term(jm_mul(m, n), c.mul(d));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> JetPoly {
        let mut acc = JetPoly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Maps every coefficient through `f`.
    pub fn map_coeffs(&self, f: &mut dyn FnMut(&CoeffExpr) -> CoeffExpr) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn try_map_coeffs<E>(&self, f: &mut dyn FnMut(&CoeffExpr) -> Result<CoeffExpr, E>) -> Result<JetPoly, E> {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Renames jet components (and field variables in coefficients must be
    /// mapped separately by the caller).
    pub fn map_monomials(&self, f: &dyn Fn(JetVar) -> JetVar) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let mut nm: JetMono = m.iter().map(|&(v, e)| (f(v), e)).collect();
            nm.sort_by_key(|p| p.0);
            out.add_term(nm, c.clone());
        }
        out
    }

    /// `∂/∂u^comp_(order)`; order zero differentiates coefficients.
    pub fn partial(&self, comp: usize, order: u32) -> JetPoly {
        let mut out = JetPoly::zero();
        if order == 0 {
            for (m, c) in &self.terms {
                out.add_term(m.clone(), c.partial(comp));
            }
            return out;
        }
        let v = jet_var(comp, order);
        for (m, c) in &self.terms {
            let e = jm_exp(m, v);
            if e != 0 {
                out.add_term(jm_mul(m, &[(v, -1)]), c.scale(&Q::int(e as i64)));
            }
            if order == 1 {
                let l = log_var(comp);
                let el = jm_exp(m, l);
                if el != 0 {
                    out.add_term(jm_mul(m, &[(v, -1), (l, -1)]), c.scale(&Q::int(el as i64)));
                }
            }
        }
        out
    }

    /// Total x-derivative.
    pub fn total_x(&self) -> JetPoly {
        let mut out = JetPoly::zero();
        for (m, c) in &self.terms {
            let span = c.var_span();
            for i in 0..span {
                let d = c.partial(i);
                if !d.is_zero() {
                    out.add_term(jm_mul(m, &[(jet_var(i, 1), 1)]), d);
                }
            }
            for &(v, e) in m.iter() {
                let comp = var_comp(v);
                let ce = c.scale(&Q::int(e as i64));
                match var_order(v) {
                    Some(o) => {
                        out.add_term(jm_mul(m, &[(v, -1), (jet_var(comp, o + 1), 1)]), ce);
                    }
                    None => {
                        let ux = jet_var(comp, 1);
                        let uxx = jet_var(comp, 2);
                        let f = if ux < uxx { [(ux, -1), (uxx, 1)] } else { [(uxx, 1), (ux, -1)] };
                        out.add_term(jm_mul(&jm_mul(m, &[(v, -1)]), &f), ce);
                    }
                }
            }
        }
        out
    }

    pub fn total_x_n(&self, n: u32) -> JetPoly {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.total_x();
        }
        p
    }

    /// Highest jet order appearing in component `comp` (logs count as 1).
    pub fn max_order_in(&self, comp: usize) -> u32 {
        let mut best = 0;
        for m in self.terms.keys() {
            for &(v, _) in m.iter() {
                if var_comp(v) == comp {
                    best = best.max(var_order(v).unwrap_or(1));
                }
            }
        }
        best
    }

    pub fn max_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.iter().map(|&(v, _)| var_order(v).unwrap_or(1)))
            .max()
            .unwrap_or(0)
    }

    /// Number of field components that coefficients or jets involve.
    pub fn comp_span(&self) -> usize {
        let mut n = 0;
        for (m, c) in &self.terms {
            n = n.max(c.var_span());
            for &(v, _) in m.iter() {
                n = n.max(var_comp(v) + 1);
            }
        }
        n
    }

    /// Degrees of all terms.
    pub fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.terms.keys().map(|m| mono_degree(m)).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn is_homogeneous(&self, deg: i32) -> bool {
        self.terms.keys().all(|m| mono_degree(m) == deg)
    }

    /// Part of degree `deg`.
    pub fn homogeneous_part(&self, deg: i32) -> JetPoly {
        JetPoly { terms: self.terms.iter().filter(|(m, _)| mono_degree(m) == deg).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    pub fn has_log(&self) -> bool {
        self.terms.keys().any(|m| m.iter().any(|&(v, _)| var_order(v).is_none()))
    }

    /// True iff no log generators and no negative jet exponents remain.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&(v, e)| var_order(v).is_some() && e > 0))
    }

    /// Variables `(comp, order)` with possibly nonzero partial derivative,
    /// order 0 meaning the field variable itself.
    pub fn dependencies(&self, ncomp: usize) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        let mut coef_span = 0;
        for (m, c) in &self.terms {
            coef_span = coef_span.max(c.var_span());
            for &(v, _) in m.iter() {
                let comp = var_comp(v);
                out.push((comp, var_order(v).unwrap_or(1)));
            }
        }
        let _ = ncomp;
        for i in 0..coef_span {
            out.push((i, 0));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Euler operator `δ/δu^comp = Σ_s (-∂_x)^s ∂/∂u^comp_(s)`.
    pub fn euler(&self, comp: usize) -> JetPoly {
        let top = self.max_order_in(comp);
        let mut out = JetPoly::zero();
        for s in 0..=top {
            let mut t = self.partial(comp, s);
            if t.is_zero() {
                continue;
            }
            t = t.total_x_n(s);
            if s % 2 == 1 {
                t = t.neg();
            }
            out.add_assign(&t);
        }
        out
    }

    /// Variational gradient over `n` components.
    pub fn variational_gradient(&self, n: usize) -> Vec<JetPoly> {
        (0..n).map(|i| self.euler(i)).collect()
    }

    /// Applies `f` to each coefficient, for substitutions of parameters or
    /// field variables.
    pub fn substitute_coeffs(&self, map: &dyn Fn(crate::coefffield::AtomId) -> Option<CoeffExpr>) -> Result<JetPoly, crate::coefffield::FieldError> {
        self.try_map_coeffs(&mut |c| c.substitute(map))
    }
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts: Vec<(String, String)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono = jet_mono_string(m);
                (mono, c.to_string())
            })
            .collect();
        parts.sort();
        let mut first = true;
        for (mono, c) in parts {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "({})", c)?;
            } else if c == "1" {
                write!(f, "{}", mono)?;
            } else {
                write!(f, "({})*{}", c, mono)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Name of a jet variable in the parser's syntax: `u1_x`, `u1_xx`, `u1_3`.
pub fn jet_var_name(v: JetVar) -> String {
    let comp = var_comp(v) + 1;
    match var_order(v) {
        None => format!("log(u{}_x)", comp),
        Some(1) => format!("u{}_x", comp),
        Some(2) => format!("u{}_xx", comp),
        Some(o) => format!("u{}_{}", comp, o),
    }
}

pub fn jet_mono_string(m: &[(JetVar, i32)]) -> String {
    let mut s: Vec<String> = Vec::new();
    for &(v, e) in m {
        let n = jet_var_name(v);
        if e == 1 {
            s.push(n);
        } else {
            s.push(format!("{}^{}", n, e));
        }
    }
    s.join("*")
}

/// Evolutionary vector field with components `X^i`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EvoField {
    pub comps: Vec<JetPoly>,
}

impl EvoField {
    pub fn new(comps: Vec<JetPoly>) -> EvoField {
        EvoField { comps }
    }

    pub fn zero(n: usize) -> EvoField {
        EvoField { comps: vec![JetPoly::zero(); n] }
    }

    pub fn n(&self) -> usize {
        self.comps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn is_polynomial(&self) -> bool {
        self.comps.iter().all(|c| c.is_polynomial())
    }

    pub fn add(&self, o: &EvoField) -> EvoField {
        EvoField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &EvoField) -> EvoField {
        EvoField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: &CoeffExpr) -> EvoField {
        EvoField { comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn neg(&self) -> EvoField {
        EvoField { comps: self.comps.iter().map(|a| a.neg()).collect() }
    }

    /// Evolutionary derivation `Σ (∂_x^s X^k) ∂f/∂u^k_(s)`.
    pub fn prolong(&self, f: &JetPoly) -> JetPoly {
        let n = self.comps.len();
        let mut out = JetPoly::zero();
        let mut derivs: Vec<Vec<JetPoly>> = self.comps.iter().map(|c| vec![c.clone()]).collect();
        for (k, s) in f.dependencies(n) {
            if k >= n {
                continue;
            }
            let d = f.partial(k, s);
            if d.is_zero() {
                continue;
            }
            while derivs[k].len() <= s as usize {
                let next = derivs[k].last().unwrap().total_x();
                derivs[k].push(next);
            }
            out.add_assign(&d.mul(&derivs[k][s as usize]));
        }
        out
    }

    /// Fréchet derivative `L★^i_k = Σ_s ∂X^i/∂u^k_(s) ∂_x^s`.
    pub fn frechet(&self) -> MatDiffOp {
        let n = self.comps.len();
        let mut op = MatDiffOp::zero(n);
        for (i, xi) in self.comps.iter().enumerate() {
            for (k, s) in xi.dependencies(n) {
                if k >= n {
                    continue;
                }
                let d = xi.partial(k, s);
                op.add_entry(i, k, s as usize, &d);
            }
        }
        op
    }

    /// Fréchet derivative and its formal adjoint.
    pub fn frechet_pair(&self) -> (MatDiffOp, MatDiffOp) {
        let l = self.frechet();
        let a = l.adjoint();
        (l, a)
    }
}
