//! Canonical elements of the coefficient field.

use super::atoms::{self, AtomId, AtomKind, FactorId};
use super::poly::{lex_cmp, mono_exp, mono_inv, mono_mul, Mono, Poly};
use crate::rational::Q;
use smallvec::SmallVec;
use std::fmt;

pub type Den = SmallVec<[(FactorId, u32); 2]>;

/// `num / Π factor^e` with `num` a Laurent polynomial in atoms whose rewrite
/// atoms have reduced exponents, no registered factor dividing `num`, and
/// factors sorted by id.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CoeffExpr {
    num: Poly,
    den: Den,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("denominator {0} is not a product of declared nonzero factors")]
    Inadmissible(String),
    #[error("generator name `{0}` already declared")]
    NameCollision(String),
    #[error("derivation of `{0}` is not closed over the declared field: {1}")]
    NotClosed(String, String),
    #[error("rewrite power must be at least 2")]
    BadRewrite,
    #[error("{0}")]
    Other(String),
}

fn den_merge_max(a: &Den, b: &Den) -> Den {
    let mut out = Den::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 == b[j].0 {
            out.push((a[i].0, a[i].1.max(b[j].1)));
            i += 1;
            j += 1;
        } else if a[i].0 < b[j].0 {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn den_add(a: &Den, b: &Den) -> Den {
    let mut out = Den::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 == b[j].0 {
            out.push((a[i].0, a[i].1 + b[j].1));
            i += 1;
            j += 1;
        } else if a[i].0 < b[j].0 {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn den_exp(d: &Den, f: FactorId) -> u32 {
    d.iter().find(|p| p.0 == f).map(|p| p.1).unwrap_or(0)
}

/// Multiplies `p` by `Π F^(target - have)`.
fn lift_num(p: &Poly, have: &Den, target: &Den) -> Poly {
    let mut out = p.clone();
    for &(f, e) in target.iter() {
        let k = e - den_exp(have, f);
        if k > 0 {
            let fp = atoms::factor_poly(f);
            for _ in 0..k {
                out = out.mul(&fp);
            }
        }
    }
    out
}

impl CoeffExpr {
    pub fn zero() -> CoeffExpr {
        CoeffExpr { num: Poly::zero(), den: Den::new() }
    }

    pub fn one() -> CoeffExpr {
        CoeffExpr::constant(Q::one())
    }

    pub fn constant(c: Q) -> CoeffExpr {
        CoeffExpr { num: Poly::constant(c), den: Den::new() }
    }

    pub fn int(n: i64) -> CoeffExpr {
        CoeffExpr::constant(Q::int(n))
    }

    pub fn rat(n: i64, d: i64) -> CoeffExpr {
        CoeffExpr::constant(Q::new(n, d))
    }

    pub fn atom(a: AtomId) -> CoeffExpr {
        CoeffExpr::from_poly(Poly::atom(a))
    }

    /// Field variable `u^(i+1)`.
    pub fn var(i: usize) -> CoeffExpr {
        CoeffExpr::atom(atoms::var_atom(i))
    }

    pub fn param(name: &str) -> CoeffExpr {
        CoeffExpr::atom(atoms::param_atom(name))
    }

    /// Function symbol `name(u^(var+1))` differentiated `order` times.
    pub fn func(name: &str, var: usize, order: u32) -> CoeffExpr {
        CoeffExpr::atom(atoms::func_atom(name, var, order))
    }

    pub fn exp(arg: &CoeffExpr) -> CoeffExpr {
        if arg.is_zero() {
            return CoeffExpr::one();
        }
        CoeffExpr::atom(atoms::exp_atom(arg))
    }

    /// `base^(p/q)` via a root generator of `base`; `base` must be invertible
    /// over the registered factors.
    pub fn power_frac(base: &CoeffExpr, p: i32, q: u32) -> Result<CoeffExpr, FieldError> {
        assert!(q >= 1);
        let g = num_integer::gcd(p.unsigned_abs(), q);
        let (p, q) = (p / g as i32, q / g);
        if q == 1 {
            return base.powi(p);
        }
        if base.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        base.try_inverse_structural()?;
        let r = CoeffExpr::atom(atoms::root_atom(base, q));
        r.powi(p)
    }

    pub fn sqrt(base: &CoeffExpr) -> Result<CoeffExpr, FieldError> {
        CoeffExpr::power_frac(base, 1, 2)
    }

    pub fn from_poly(p: Poly) -> CoeffExpr {
        CoeffExpr::build(p, Den::new())
    }

    /// Canonicalizes a raw numerator/denominator pair.
    fn build(num: Poly, den: Den) -> CoeffExpr {
        let needs_rewrite = num.terms.iter().any(|(m, _)| m.iter().any(|&(a, _)| atoms::has_rewrite(a)));
        if needs_rewrite {
            let mut acc = CoeffExpr::zero();
            let mut plain: Vec<(Mono, Q)> = Vec::new();
            for (m, c) in num.terms {
                match reduce_monomial(&m) {
                    None => plain.push((m, c)),
                    Some(e) => acc = acc.add(&e.scale(&c)),
                }
            }
            let base = CoeffExpr::cancel(Poly::from_terms(plain), Den::new());
            let total = acc.add(&base);
            let d = CoeffExpr { num: Poly::one(), den: den.clone() };
            return total.mul_noreduce_rewrite(&d);
        }
        CoeffExpr::cancel(num, den)
    }

    /// Removes factors of `den` that divide `num`.
    fn cancel(mut num: Poly, den: Den) -> CoeffExpr {
        if num.is_zero() {
            return CoeffExpr::zero();
        }
        let mut out = Den::new();
        for (f, mut e) in den {
            if e == 0 {
                continue;
            }
            let fp = atoms::factor_poly(f);
            while e > 0 {
                match num.div_exact(&fp) {
                    Some(q) => {
                        num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e > 0 {
                out.push((f, e));
            }
        }
        CoeffExpr { num, den: out }
    }

    fn mul_noreduce_rewrite(&self, o: &CoeffExpr) -> CoeffExpr {
        CoeffExpr::cancel(self.num.mul(&o.num), den_add(&self.den, &o.den))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Den {
        &self.den
    }

    pub fn den_poly(&self) -> Poly {
        let mut p = Poly::one();
        for &(f, e) in self.den.iter() {
            let fp = atoms::factor_poly(f);
            for _ in 0..e {
                p = p.mul(&fp);
            }
        }
        p
    }

    pub fn term_count(&self) -> usize {
        self.num.len()
    }

    pub fn add(&self, o: &CoeffExpr) -> CoeffExpr {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        if self.den == o.den {
            if self.den.is_empty() {
                return CoeffExpr { num: self.num.add(&o.num), den: Den::new() };
            }
            return CoeffExpr::cancel(self.num.add(&o.num), self.den.clone());
        }
        let d = den_merge_max(&self.den, &o.den);
        let a = lift_num(&self.num, &self.den, &d);
        let b = lift_num(&o.num, &o.den, &d);
        CoeffExpr::cancel(a.add(&b), d)
    }

    pub fn neg(&self) -> CoeffExpr {
        CoeffExpr { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &CoeffExpr) -> CoeffExpr {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Q) -> CoeffExpr {
        if c.is_zero() {
            return CoeffExpr::zero();
        }
        CoeffExpr { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn mul(&self, o: &CoeffExpr) -> CoeffExpr {
        if self.is_zero() || o.is_zero() {
            return CoeffExpr::zero();
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        let num = self.num.mul(&o.num);
        let den = den_add(&self.den, &o.den);
        let rw = self.has_rewrite_atoms() && o.has_rewrite_atoms();
        if rw {
            CoeffExpr::build(num, den)
        } else {
            CoeffExpr::cancel(num, den)
        }
    }

    fn has_rewrite_atoms(&self) -> bool {
        self.num.terms.iter().any(|(m, _)| m.iter().any(|&(a, _)| atoms::has_rewrite(a)))
    }

    pub fn pow(&self, k: u32) -> CoeffExpr {
        let mut acc = CoeffExpr::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn powi(&self, k: i32) -> Result<CoeffExpr, FieldError> {
        if k >= 0 {
            Ok(self.pow(k as u32))
        } else {
            Ok(self.try_inverse_structural()?.pow((-k) as u32))
        }
    }

    /// Splits the numerator as `unit * monomial * Π registered factors`.
    /// Fails if a non-monomial cofactor remains.
    pub fn factor_numerator(&self) -> Result<(Q, Mono, Vec<(FactorId, u32)>), FieldError> {
        if self.num.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let mut p = self.num.clone();
        let mut found: Vec<(FactorId, u32)> = Vec::new();
        if !p.is_monomial() {
            let (_, content, prim) = p.primitive_part();
            let _ = content;
            if let Some(id) = atoms::lookup_factor(&prim) {
                let q = p.div_exact(&prim).expect("primitive part divides");
                found.push((id, 1));
                p = q;
            } else {
                for (id, fp) in atoms::all_factors() {
                    let mut k = 0;
                    while p.len() > 1 {
                        match p.div_exact(&fp) {
                            Some(q) => {
                                p = q;
                                k += 1;
                            }
                            None => break,
                        }
                    }
                    if k > 0 {
                        found.push((id, k));
                    }
                    if p.is_monomial() {
                        break;
                    }
                }
            }
        }
        if !p.is_monomial() {
            return Err(FieldError::Inadmissible(format!("{}", CoeffExpr::from_poly(p))));
        }
        let (m, c) = p.terms[0].clone();
        found.sort();
        Ok((c, m, found))
    }

    /// Multiplicative inverse using only structural invertibility
    /// (registered factors, Laurent monomials, rewrite atoms).
    pub fn try_inverse_structural(&self) -> Result<CoeffExpr, FieldError> {
        let (c, m, fs) = self.factor_numerator()?;
        let mut fden: Den = fs.iter().map(|&(f, k)| (f, k)).collect();
        fden.sort();
        let inv_m = mono_inv(&m);
        let num = self.den_poly().mul_mono(&inv_m, &c.inv());
        Ok(CoeffExpr::build(num, fden))
    }

    /// Partial derivative in the field variable `u^(i+1)`.
    pub fn partial(&self, i: usize) -> CoeffExpr {
        if self.is_zero() {
            return CoeffExpr::zero();
        }
        let inv_den = CoeffExpr { num: Poly::one(), den: self.den.clone() };
        let mut acc = poly_partial(&self.num, i).mul(&inv_den);
        for &(f, e) in self.den.iter() {
            let fp = atoms::factor_poly(f);
            let df = poly_partial(&fp, i);
            if df.is_zero() {
                continue;
            }
            let mut d2 = self.den.clone();
            for p in d2.iter_mut() {
                if p.0 == f {
                    p.1 += 1;
                }
            }
            let t = CoeffExpr { num: self.num.clone(), den: d2 }.mul(&df);
            acc = acc.sub(&t.scale(&Q::int(e as i64)));
        }
        acc
    }

    /// Antiderivative in `u^(i+1)` with zero integration constant. Defined
    /// when the numerator is a Laurent polynomial in `u^(i+1)` over atoms and
    /// factors independent of it, with no `(u^(i+1))^{-1}` term.
    pub fn integrate(&self, i: usize) -> Option<CoeffExpr> {
        let v = atoms::var_atom(i);
        let depends = |a: AtomId| a != v && !atoms::atom_partial(a, i).is_zero();
        if self.num.atoms().into_iter().any(depends) {
            return None;
        }
        if self.den.iter().any(|&(f, _)| !poly_partial(&atoms::factor_poly(f), i).is_zero()) {
            return None;
        }
        let mut terms = Vec::with_capacity(self.num.len());
        for (m, c) in &self.num.terms {
            let k = mono_exp(m, v);
            if k == -1 {
                return None;
            }
            terms.push((mono_mul(m, &[(v, 1)]), c * &Q::new(1, (k + 1) as i64)));
        }
        Some(CoeffExpr::build(Poly::from_terms(terms), self.den.clone()))
    }

    /// Registers the non-monomial cofactor of the numerator as a factor when
    /// it is not already a product of known factors.
    pub fn ensure_invertible(&self) -> Result<(), FieldError> {
        if self.num.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        if self.factor_numerator().is_ok() {
            return Ok(());
        }
        let mut p = self.num.clone();
        for (_, fp) in atoms::all_factors() {
            while p.len() > 1 {
                match p.div_exact(&fp) {
                    Some(q) => p = q,
                    None => break,
                }
            }
        }
        let (_, _, prim) = p.primitive_part();
        atoms::intern_factor(&prim);
        Ok(())
    }

    /// True when every field-variable partial vanishes.
    pub fn is_field_constant(&self) -> bool {
        self.atoms().iter().all(|&a| atoms::is_constant(a))
    }

    /// Number of field variables the expression can depend on.
    pub fn var_span(&self) -> usize {
        self.atoms().iter().map(|&a| atoms::atom_var_span(a)).max().unwrap_or(0)
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        let mut v = self.num.atoms();
        for &(f, _) in self.den.iter() {
            v.extend(atoms::factor_poly(f).atoms());
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Substitutes atoms by expressions; atoms built from substituted atoms
    /// (exponentials, roots, functions) are rebuilt.
    pub fn substitute(&self, map: &dyn Fn(AtomId) -> Option<CoeffExpr>) -> Result<CoeffExpr, FieldError> {
        let num = subst_poly(&self.num, map)?;
        let mut den = CoeffExpr::one();
        for &(f, e) in self.den.iter() {
            let fp = subst_poly(&atoms::factor_poly(f), map)?;
            fp.ensure_invertible()?;
            den = den.mul(&fp.pow(e));
        }
        Ok(num.mul(&den.try_inverse_structural()?))
    }

    /// Numeric evaluation; `env` supplies values for variables, parameters
    /// and function symbols.
    pub fn eval_f64(&self, env: &dyn Fn(&AtomKind) -> Option<f64>) -> Option<f64> {
        let n = eval_poly(&self.num, env)?;
        let mut d = 1.0;
        for &(f, e) in self.den.iter() {
            d *= eval_poly(&atoms::factor_poly(f), env)?.powi(e as i32);
        }
        Some(n / d)
    }

    /// Coefficient of `atom^k` when viewing the numerator as a Laurent
    /// polynomial in `atom`, over the same denominator.
    pub fn coeff_of_atom_power(&self, atom: AtomId, k: i32) -> CoeffExpr {
        let terms: Vec<(Mono, Q)> = self
            .num
            .terms
            .iter()
            .filter(|(m, _)| mono_exp(m, atom) == k)
            .map(|(m, c)| (mono_mul(m, &[(atom, -k)]), c.clone()))
            .collect();
        CoeffExpr::build(Poly::from_terms(terms), self.den.clone())
    }

    /// Display sort key giving a run-independent order of terms.
    fn sorted_terms(p: &Poly) -> Vec<(String, Vec<(String, i32)>, Q)> {
        let mut v: Vec<(String, Vec<(String, i32)>, Q)> = p
            .terms
            .iter()
            .map(|(m, c)| {
                let mut names: Vec<(String, i32)> = m.iter().map(|&(a, e)| (atoms::atom_name(a), e)).collect();
                names.sort();
                let deg: i32 = m.iter().map(|p| p.1).sum();
                (format!("{:08}", 1_000_000 - deg), names, c.clone())
            })
            .collect();
        v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        v
    }

    fn fmt_poly(p: &Poly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if p.is_zero() {
            return write!(f, "0");
        }
        for (idx, (_, names, c)) in CoeffExpr::sorted_terms(p).into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            let (an, ad) = (a.numer(), a.denom());
            let num_is_one = an == num_bigint::BigInt::from(1);
            if !num_is_one || names.iter().all(|(_, e)| *e < 0) {
                parts.push(an.to_string());
            }
            for (n, e) in &names {
                if *e > 0 {
                    if *e == 1 {
                        parts.push(n.clone());
                    } else {
                        parts.push(format!("{}^{}", n, e));
                    }
                }
            }
            let mut s = parts.join("*");
            let mut dens: Vec<String> = Vec::new();
            if ad != num_bigint::BigInt::from(1) {
                dens.push(ad.to_string());
            }
            for (n, e) in &names {
                if *e < 0 {
                    if *e == -1 {
                        dens.push(n.clone());
                    } else {
                        dens.push(format!("{}^{}", n, -e));
                    }
                }
            }
            if !dens.is_empty() {
                if dens.len() == 1 {
                    s.push_str(&format!("/{}", dens[0]));
                } else {
                    s.push_str(&format!("/({})", dens.join("*")));
                }
            }
            write!(f, "{}", s)?;
        }
        Ok(())
    }
}

/// Reduces rewrite atoms in a monomial; `None` if nothing to do.
fn reduce_monomial(m: &Mono) -> Option<CoeffExpr> {
    let mut rest = Mono::new();
    let mut extra: Vec<(CoeffExpr, i32)> = Vec::new();
    let mut changed = false;
    for &(a, e) in m.iter() {
        if atoms::has_rewrite(a) {
            let (q, value) = atoms::rewrite_rule(a).expect("rewrite rule");
            let q = q as i32;
            let k = e.div_euclid(q);
            let r = e.rem_euclid(q);
            if k != 0 {
                changed = true;
                extra.push((value, k));
            }
            if r != 0 {
                rest.push((a, r));
            }
        } else {
            rest.push((a, e));
        }
    }
    if !changed {
        return None;
    }
    let mut acc = CoeffExpr { num: Poly::monomial(rest, Q::one()), den: Den::new() };
    for (v, k) in extra {
        let p = v.powi(k).expect("rewrite value must be invertible");
        acc = acc.mul(&p);
    }
    Some(acc)
}

pub(crate) fn poly_partial(p: &Poly, i: usize) -> CoeffExpr {
    let mut plain: Vec<(Mono, Q)> = Vec::new();
    let mut gen_terms: Vec<CoeffExpr> = Vec::new();
    for (m, c) in &p.terms {
        for &(a, e) in m.iter() {
            if let Some(v) = atoms::as_var(a) {
                if v == i {
                    plain.push((mono_mul(m, &[(a, -1)]), c * &Q::int(e as i64)));
                }
            } else if atoms::tag(a) != atoms::TAG_PARAM {
                let da = atoms::atom_partial(a, i);
                if !da.is_zero() {
                    let rest = CoeffExpr { num: Poly::monomial(mono_mul(m, &[(a, -1)]), c * &Q::int(e as i64)), den: Den::new() };
                    gen_terms.push(rest.mul(&da));
                }
            }
        }
    }
    let mut acc = CoeffExpr { num: Poly::from_terms(plain), den: Den::new() };
    for g in gen_terms {
        acc = acc.add(&g);
    }
    acc
}

fn subst_atom(a: AtomId, map: &dyn Fn(AtomId) -> Option<CoeffExpr>) -> Result<CoeffExpr, FieldError> {
    if let Some(v) = map(a) {
        return Ok(v);
    }
    match atoms::kind(a) {
        AtomKind::Var(_) | AtomKind::Param(_) | AtomKind::Gen { .. } => Ok(CoeffExpr::atom(a)),
        AtomKind::Func { name, var, order } => match map(atoms::var_atom(var)) {
            None => Ok(CoeffExpr::atom(a)),
            Some(e) => {
                let atoms_e = e.atoms();
                if atoms_e.len() == 1 && e.num.terms.len() == 1 && e.den.is_empty() && e.num.terms[0].0.as_slice() == [(atoms_e[0], 1)] && e.num.terms[0].1.is_one() {
                    if let Some(w) = atoms::as_var(atoms_e[0]) {
                        return Ok(CoeffExpr::func(&name, w, order));
                    }
                }
                Err(FieldError::Other(format!("cannot substitute into function symbol {}", name)))
            }
        },
        AtomKind::Exp { arg } => Ok(CoeffExpr::exp(&arg.substitute(map)?)),
        AtomKind::Root { base, q } => {
            let nb = base.substitute(map)?;
            nb.ensure_invertible()?;
            CoeffExpr::power_frac(&nb, 1, q)
        }
    }
}

fn subst_poly(p: &Poly, map: &dyn Fn(AtomId) -> Option<CoeffExpr>) -> Result<CoeffExpr, FieldError> {
    let mut cache: std::collections::HashMap<AtomId, CoeffExpr> = std::collections::HashMap::new();
    let mut acc = CoeffExpr::zero();
    for (m, c) in &p.terms {
        let mut t = CoeffExpr::constant(c.clone());
        for &(a, e) in m.iter() {
            let v = match cache.get(&a) {
                Some(v) => v.clone(),
                None => {
                    let v = subst_atom(a, map)?;
                    cache.insert(a, v.clone());
                    v
                }
            };
            t = t.mul(&v.powi(e)?);
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

fn eval_atom(a: AtomId, env: &dyn Fn(&AtomKind) -> Option<f64>) -> Option<f64> {
    let k = atoms::kind(a);
    if let Some(v) = env(&k) {
        return Some(v);
    }
    match k {
        AtomKind::Exp { arg } => Some(arg.eval_f64(env)?.exp()),
        AtomKind::Root { base, q } => Some(base.eval_f64(env)?.powf(1.0 / q as f64)),
        _ => None,
    }
}

fn eval_poly(p: &Poly, env: &dyn Fn(&AtomKind) -> Option<f64>) -> Option<f64> {
    let mut s = 0.0;
    for (m, c) in &p.terms {
        let mut t = c.to_f64();
        for &(a, e) in m.iter() {
            t *= eval_atom(a, env)?.powi(e);
        }
        s += t;
    }
    Some(s)
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return CoeffExpr::fmt_poly(&self.num, f);
        }
        let multi = self.num.len() > 1;
        if multi {
            write!(f, "(")?;
        }
        CoeffExpr::fmt_poly(&self.num, f)?;
        if multi {
            write!(f, ")")?;
        }
        let mut ds: Vec<String> = self
            .den
            .iter()
            .map(|&(fid, e)| {
                let s = format!("({})", CoeffExpr::from_poly((*atoms::factor_poly(fid)).clone()));
                if e == 1 {
                    s
                } else {
                    format!("{}^{}", s, e)
                }
            })
            .collect();
        ds.sort();
        if ds.len() == 1 {
            write!(f, "/{}", ds[0])
        } else {
            write!(f, "/({})", ds.join("*"))
        }
    }
}

impl fmt::Debug for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PartialOrd for CoeffExpr {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for CoeffExpr {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        let a = &self.num.terms;
        let b = &o.num.terms;
        for (x, y) in a.iter().zip(b.iter()) {
            let c = lex_cmp(&x.0, &y.0).then_with(|| x.1.cmp(&y.1));
            if c != std::cmp::Ordering::Equal {
                return c;
            }
        }
        a.len().cmp(&b.len()).then_with(|| self.den.cmp(&o.den))
    }
}

macro_rules! bin_ops {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<&CoeffExpr> for &CoeffExpr {
            type Output = CoeffExpr;
            fn $m(self, o: &CoeffExpr) -> CoeffExpr {
                self.$f(o)
            }
        }
        impl std::ops::$tr<CoeffExpr> for CoeffExpr {
            type Output = CoeffExpr;
            fn $m(self, o: CoeffExpr) -> CoeffExpr {
                (&self).$f(&o)
            }
        }
        impl std::ops::$tr<&CoeffExpr> for CoeffExpr {
            type Output = CoeffExpr;
            fn $m(self, o: &CoeffExpr) -> CoeffExpr {
                (&self).$f(o)
            }
        }
    };
}
bin_ops!(Add, add, add);
bin_ops!(Sub, sub, sub);
bin_ops!(Mul, mul, mul);

impl std::ops::Neg for &CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        CoeffExpr::neg(self)
    }
}

impl std::ops::Neg for CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        CoeffExpr::neg(&self)
    }
}

impl From<i64> for CoeffExpr {
    fn from(n: i64) -> Self {
        CoeffExpr::int(n)
    }
}

impl From<Q> for CoeffExpr {
    fn from(q: Q) -> Self {
        CoeffExpr::constant(q)
    }
}
