//! Global registry of coefficient atoms and denominator factors.
//!
//! Atoms are interned structurally, so the same exponential, root or
//! function symbol always maps to the same id. Declared generators carry a
//! serial number and are therefore never merged across sessions.

use super::expr::CoeffExpr;
use super::poly::Poly;
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub type AtomId = u32;
pub type FactorId = u32;

pub const MAX_VARS: usize = 16;

const TAG_SHIFT: u32 = 28;
const INDEX_MASK: u32 = (1 << TAG_SHIFT) - 1;

pub const TAG_VAR: u32 = 0;
pub const TAG_PARAM: u32 = 1;
pub const TAG_FUNC: u32 = 2;
pub const TAG_EXP: u32 = 3;
pub const TAG_GEN: u32 = 4;
pub const TAG_ROOT: u32 = 5;
pub const TAG_GEN_REWRITE: u32 = 6;

#[inline]
pub fn tag(a: AtomId) -> u32 {
    a >> TAG_SHIFT
}

#[inline]
pub fn has_rewrite(a: AtomId) -> bool {
    let t = tag(a);
    t == TAG_ROOT || t == TAG_GEN_REWRITE
}

#[inline]
pub fn var_atom(i: usize) -> AtomId {
    assert!(i < MAX_VARS, "field variable index out of range");
    i as AtomId
}

#[inline]
pub fn as_var(a: AtomId) -> Option<usize> {
    if tag(a) == TAG_VAR {
        Some((a & INDEX_MASK) as usize)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub enum AtomKind {
    Var(usize),
    Param(String),
    /// `order`-th derivative of a function of the single field variable `var`.
    Func { name: String, var: usize, order: u32 },
    Exp { arg: CoeffExpr },
    Root { base: CoeffExpr, q: u32 },
    Gen { name: String, serial: u64 },
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Param(String),
    Func(String, usize, u32),
    Exp(CoeffExpr),
    Root(CoeffExpr, u32),
    Gen(String, u64),
}

pub struct AtomData {
    pub kind: AtomKind,
    /// Derivatives of a declared generator, by variable index.
    pub partials: RwLock<Vec<(usize, CoeffExpr)>>,
    pub rewrite: Option<(u32, CoeffExpr)>,
}

struct Table {
    atoms: Vec<Arc<AtomData>>,
    keys: HashMap<Key, AtomId>,
    factors: Vec<Arc<Poly>>,
    factor_keys: HashMap<Poly, FactorId>,
    deriv_cache: HashMap<(AtomId, usize), CoeffExpr>,
}

static TABLE: Lazy<RwLock<Table>> = Lazy::new(|| {
    RwLock::new(Table {
        atoms: Vec::new(),
        keys: HashMap::new(),
        factors: Vec::new(),
        factor_keys: HashMap::new(),
        deriv_cache: HashMap::new(),
    })
});

static SERIAL: AtomicU64 = AtomicU64::new(1);

fn intern(key: Key, tag: u32, make: impl FnOnce() -> AtomData) -> AtomId {
    if let Some(id) = TABLE.read().keys.get(&key) {
        return *id;
    }
    let mut t = TABLE.write();
    if let Some(id) = t.keys.get(&key) {
        return *id;
    }
    let idx = t.atoms.len() as u32;
    assert!(idx <= INDEX_MASK, "atom table overflow");
    let id = (tag << TAG_SHIFT) | idx;
    t.atoms.push(Arc::new(make()));
    t.keys.insert(key, id);
    id
}

fn plain(kind: AtomKind) -> AtomData {
    AtomData { kind, partials: RwLock::new(Vec::new()), rewrite: None }
}

pub fn param_atom(name: &str) -> AtomId {
    intern(Key::Param(name.to_string()), TAG_PARAM, || plain(AtomKind::Param(name.to_string())))
}

pub fn func_atom(name: &str, var: usize, order: u32) -> AtomId {
    intern(Key::Func(name.to_string(), var, order), TAG_FUNC, || {
        plain(AtomKind::Func { name: name.to_string(), var, order })
    })
}

pub fn exp_atom(arg: &CoeffExpr) -> AtomId {
    intern(Key::Exp(arg.clone()), TAG_EXP, || plain(AtomKind::Exp { arg: arg.clone() }))
}

/// `base^(1/q)`; the caller guarantees `base` is invertible.
pub fn root_atom(base: &CoeffExpr, q: u32) -> AtomId {
    assert!(q >= 2);
    intern(Key::Root(base.clone(), q), TAG_ROOT, || AtomData {
        kind: AtomKind::Root { base: base.clone(), q },
        partials: RwLock::new(Vec::new()),
        rewrite: Some((q, base.clone())),
    })
}

/// Allocates a fresh generator; partials are installed afterwards.
pub fn fresh_gen_atom(name: &str, rewrite: Option<(u32, CoeffExpr)>) -> AtomId {
    let serial = SERIAL.fetch_add(1, Ordering::Relaxed);
    let tag = if rewrite.is_some() { TAG_GEN_REWRITE } else { TAG_GEN };
    intern(Key::Gen(name.to_string(), serial), tag, || AtomData {
        kind: AtomKind::Gen { name: name.to_string(), serial },
        partials: RwLock::new(Vec::new()),
        rewrite,
    })
}

pub fn set_gen_partials(a: AtomId, partials: Vec<(usize, CoeffExpr)>) {
    let d = data(a).expect("generator atom");
    *d.partials.write() = partials;
    let mut t = TABLE.write();
    t.deriv_cache.retain(|k, _| k.0 != a);
}

pub fn data(a: AtomId) -> Option<Arc<AtomData>> {
    if tag(a) == TAG_VAR {
        return None;
    }
    let t = TABLE.read();
    t.atoms.get((a & INDEX_MASK) as usize).cloned()
}

pub fn kind(a: AtomId) -> AtomKind {
    match as_var(a) {
        Some(i) => AtomKind::Var(i),
        None => data(a).expect("unknown atom").kind.clone(),
    }
}

pub fn rewrite_rule(a: AtomId) -> Option<(u32, CoeffExpr)> {
    if !has_rewrite(a) {
        return None;
    }
    data(a).and_then(|d| d.rewrite.clone())
}

/// True when the atom has zero derivative in every field variable.
pub fn is_constant(a: AtomId) -> bool {
    match tag(a) {
        TAG_PARAM => true,
        TAG_VAR | TAG_FUNC => false,
        TAG_EXP => match kind(a) {
            AtomKind::Exp { arg } => arg.is_field_constant(),
            _ => unreachable!(),
        },
        TAG_ROOT => match kind(a) {
            AtomKind::Root { base, .. } => base.is_field_constant(),
            _ => unreachable!(),
        },
        _ => data(a).map(|d| d.partials.read().iter().all(|(_, e)| e.is_zero())).unwrap_or(true),
    }
}

/// `∂a/∂u^i`, memoized.
pub fn atom_partial(a: AtomId, i: usize) -> CoeffExpr {
    if let Some(v) = as_var(a) {
        return if v == i { CoeffExpr::one() } else { CoeffExpr::zero() };
    }
    if tag(a) == TAG_PARAM {
        return CoeffExpr::zero();
    }
    if let Some(e) = TABLE.read().deriv_cache.get(&(a, i)) {
        return e.clone();
    }
    let d = data(a).expect("unknown atom");
    let r = match &d.kind {
        AtomKind::Var(_) | AtomKind::Param(_) => unreachable!(),
        AtomKind::Func { name, var, order } => {
            if *var == i {
                CoeffExpr::atom(func_atom(name, *var, order + 1))
            } else {
                CoeffExpr::zero()
            }
        }
        AtomKind::Exp { arg } => arg.partial(i).mul(&CoeffExpr::atom(a)),
        AtomKind::Root { base, q } => {
            let db = base.partial(i);
            if db.is_zero() {
                CoeffExpr::zero()
            } else {
                let inv = base.try_inverse_structural().expect("root base must be invertible");
                db.mul(&inv).mul(&CoeffExpr::atom(a)).scale(&crate::rational::Q::new(1, *q as i64))
            }
        }
        AtomKind::Gen { .. } => d
            .partials
            .read()
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, e)| e.clone())
            .unwrap_or_else(CoeffExpr::zero),
    };
    TABLE.write().deriv_cache.insert((a, i), r.clone());
    r
}

/// Largest field-variable index an atom depends on, plus one.
pub fn atom_var_span(a: AtomId) -> usize {
    match kind(a) {
        AtomKind::Var(i) => i + 1,
        AtomKind::Param(_) => 0,
        AtomKind::Func { var, .. } => var + 1,
        AtomKind::Exp { arg } => arg.var_span(),
        AtomKind::Root { base, .. } => base.var_span(),
        AtomKind::Gen { .. } => data(a)
            .map(|d| d.partials.read().iter().filter(|(_, e)| !e.is_zero()).map(|(j, _)| j + 1).max().unwrap_or(0))
            .unwrap_or(0),
    }
}

/// Interns a normalized irreducible factor (primitive, positive leading
/// coefficient, no monomial content).
pub fn intern_factor(p: &Poly) -> FactorId {
    if let Some(id) = TABLE.read().factor_keys.get(p) {
        return *id;
    }
    let mut t = TABLE.write();
    if let Some(id) = t.factor_keys.get(p) {
        return *id;
    }
    let id = t.factors.len() as FactorId;
    t.factors.push(Arc::new(p.clone()));
    t.factor_keys.insert(p.clone(), id);
    id
}

pub fn lookup_factor(p: &Poly) -> Option<FactorId> {
    TABLE.read().factor_keys.get(p).copied()
}

pub fn factor_poly(id: FactorId) -> Arc<Poly> {
    TABLE.read().factors[id as usize].clone()
}

pub fn all_factors() -> Vec<(FactorId, Arc<Poly>)> {
    TABLE.read().factors.iter().enumerate().map(|(i, p)| (i as FactorId, p.clone())).collect()
}

/// Printable name of an atom.
pub fn atom_name(a: AtomId) -> String {
    match kind(a) {
        AtomKind::Var(i) => format!("u{}", i + 1),
        AtomKind::Param(n) => n,
        AtomKind::Func { name, var, order } => {
            let mut s = name.clone();
            for _ in 0..order {
                s.push('\'');
            }
            if var != 0 {
                s.push_str(&format!("[u{}]", var + 1));
            }
            s
        }
        AtomKind::Exp { arg } => format!("exp({})", arg),
        AtomKind::Root { base, q } => {
            if q == 2 {
                format!("sqrt({})", base)
            } else {
                format!("root({}, {})", base, q)
            }
        }
        AtomKind::Gen { name, .. } => name,
    }
}
