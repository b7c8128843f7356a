//! Sessions: declared parameters, nonvanishing constraints and generators.

use super::atoms::{self, AtomId, AtomKind, FactorId};
use super::expr::{CoeffExpr, FieldError};
use std::collections::{BTreeMap, HashSet};

/// Algebraic rewrite rule `g^q -> value`.
#[derive(Clone, Debug)]
pub struct Rewrite {
    pub q: u32,
    pub value: CoeffExpr,
}

/// A computation context over `n` field variables.
///
/// Arithmetic on [`CoeffExpr`] never needs the session; it is consulted
/// when dividing (admissibility of denominators) and when declaring new
/// generators.
#[derive(Clone, Debug)]
pub struct Field {
    nvars: usize,
    nonzero_atoms: HashSet<AtomId>,
    nonzero_factors: HashSet<FactorId>,
    generators: BTreeMap<String, AtomId>,
    functions: BTreeMap<String, usize>,
    params: BTreeMap<String, AtomId>,
}

impl Field {
    pub fn new(nvars: usize) -> Field {
        assert!(nvars <= atoms::MAX_VARS);
        Field {
            nvars,
            nonzero_atoms: HashSet::new(),
            nonzero_factors: HashSet::new(),
            generators: BTreeMap::new(),
            functions: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Same constraints over a larger set of variables.
    pub fn with_nvars(&self, nvars: usize) -> Field {
        assert!(nvars >= self.nvars && nvars <= atoms::MAX_VARS);
        Field { nvars, ..self.clone() }
    }

    pub fn var(&self, i: usize) -> CoeffExpr {
        assert!(i < self.nvars, "field variable index out of range");
        CoeffExpr::var(i)
    }

    pub fn param(&mut self, name: &str) -> CoeffExpr {
        let a = atoms::param_atom(name);
        self.params.insert(name.to_string(), a);
        CoeffExpr::atom(a)
    }

    pub fn params(&self) -> impl Iterator<Item = (&String, &AtomId)> {
        self.params.iter()
    }

    /// Declares a function symbol of the single variable `u^(var+1)`.
    pub fn function(&mut self, name: &str, var: usize) -> CoeffExpr {
        self.functions.insert(name.to_string(), var);
        CoeffExpr::func(name, var, 0)
    }

    pub fn function_var(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }

    pub fn generator(&self, name: &str) -> Option<CoeffExpr> {
        self.generators.get(name).map(|&a| CoeffExpr::atom(a))
    }

    pub fn generator_names(&self) -> impl Iterator<Item = &String> {
        self.generators.keys()
    }

    /// Declares `e` nonvanishing. Monomial factors mark their atoms, other
    /// factors are registered as irreducible denominators.
    pub fn declare_nonzero(&mut self, e: &CoeffExpr) -> Result<(), FieldError> {
        if e.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let num = e.num().clone();
        let mut rest = num.clone();
        if !num.is_monomial() {
            let (_, content, prim) = num.primitive_part();
            for &(a, _) in content.iter() {
                self.nonzero_atoms.insert(a);
            }
            match CoeffExpr::from_poly(prim.clone()).factor_numerator() {
                Ok((_, m, fs)) => {
                    for &(a, _) in m.iter() {
                        self.nonzero_atoms.insert(a);
                    }
                    for (f, _) in fs {
                        self.nonzero_factors.insert(f);
                    }
                }
                Err(_) => {
                    let id = atoms::intern_factor(&prim);
                    self.nonzero_factors.insert(id);
                }
            }
            rest = super::poly::Poly::one();
        }
        for (m, _) in &rest.terms {
            for &(a, _) in m.iter() {
                self.nonzero_atoms.insert(a);
            }
        }
        for &(f, _) in e.den().iter() {
            self.nonzero_factors.insert(f);
        }
        Ok(())
    }

    pub fn is_nonzero_atom(&self, a: AtomId) -> bool {
        match atoms::tag(a) {
            atoms::TAG_EXP | atoms::TAG_ROOT => true,
            _ => self.nonzero_atoms.contains(&a),
        }
    }

    /// Division checked against the declared constraints.
    pub fn div(&self, a: &CoeffExpr, b: &CoeffExpr) -> Result<CoeffExpr, FieldError> {
        Ok(a.mul(&self.inv(b)?))
    }

    pub fn inv(&self, b: &CoeffExpr) -> Result<CoeffExpr, FieldError> {
        if b.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let (_, m, fs) = b.factor_numerator()?;
        for &(a, _) in m.iter() {
            if !self.is_nonzero_atom(a) {
                return Err(FieldError::Inadmissible(atoms::atom_name(a)));
            }
        }
        for (f, _) in fs {
            if !self.nonzero_factors.contains(&f) {
                return Err(FieldError::Inadmissible(format!("{}", CoeffExpr::from_poly((*atoms::factor_poly(f)).clone()))));
            }
        }
        b.try_inverse_structural()
    }

    /// Exact power `b^(p/q)` with admissibility of `b` checked.
    pub fn power_frac(&self, b: &CoeffExpr, p: i32, q: u32) -> Result<CoeffExpr, FieldError> {
        self.inv(b)?;
        CoeffExpr::power_frac(b, p, q)
    }

    /// Declares a generator `g` with `∂_i g = partials(g)[i]` and optional
    /// rewrite `g^q -> value`.
    pub fn declare_generator(
        &mut self,
        name: &str,
        partials: impl FnOnce(&CoeffExpr) -> Vec<(usize, CoeffExpr)>,
        rewrite: Option<Rewrite>,
    ) -> Result<CoeffExpr, FieldError> {
        if self.generators.contains_key(name) || self.params.contains_key(name) || self.functions.contains_key(name) {
            return Err(FieldError::NameCollision(name.to_string()));
        }
        if let Some(r) = &rewrite {
            if r.q < 2 {
                return Err(FieldError::BadRewrite);
            }
            if !r.value.is_zero() {
                r.value.try_inverse_structural()?;
            }
        }
        let a = atoms::fresh_gen_atom(name, rewrite.as_ref().map(|r| (r.q, r.value.clone())));
        let me = CoeffExpr::atom(a);
        let parts = partials(&me);
        for (i, e) in &parts {
            if *i >= self.nvars {
                return Err(FieldError::NotClosed(name.to_string(), format!("variable index {} out of range", i)));
            }
            for b in e.atoms() {
                if let AtomKind::Gen { name: other, .. } = atoms::kind(b) {
                    if b != a && self.generators.get(&other) != Some(&b) {
                        return Err(FieldError::NotClosed(name.to_string(), other));
                    }
                }
            }
        }
        if let Some(r) = &rewrite {
            for b in r.value.atoms() {
                if let AtomKind::Gen { name: other, .. } = atoms::kind(b) {
                    if self.generators.get(&other) != Some(&b) {
                        return Err(FieldError::NotClosed(name.to_string(), other));
                    }
                }
            }
        }
        atoms::set_gen_partials(a, parts);
        self.generators.insert(name.to_string(), a);
        self.nonzero_atoms.insert(a);
        Ok(me)
    }
}
