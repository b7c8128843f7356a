//! Schouten brackets of local bivectors in δ-function normal form, Lie
//! derivatives along evolutionary fields and Poisson-pencil residuals.

use crate::jetspace::{EvoField, JetPoly};
use crate::localops::{GradedPencil, MatDiffOp, OpError};
use crate::rational::Q;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Key `(i, j, k, s, t)` of the coefficient of `δ^(s)(x−y) δ^(t)(x−z)`.
pub type NfKey = (u8, u8, u8, u8, u8);

/// Trivector in normal form: `Σ C^{ijk}_{s,t}(x) δ^(s)(x−y) δ^(t)(x−z)`.
///
/// Paired with covectors `a, b, c` this is `∫ Σ C^{ijk}_{s,t} a_i b_j^(s) c_k^(t) dx`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TriVectorNF {
    pub n: usize,
    pub coeffs: BTreeMap<NfKey, JetPoly>,
}

impl TriVectorNF {
    pub fn zero(n: usize) -> TriVectorNF {
        TriVectorNF { n, coeffs: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, key: NfKey) -> JetPoly {
        self.coeffs.get(&key).cloned().unwrap_or_else(JetPoly::zero)
    }

    pub fn add_term(&mut self, key: NfKey, c: &JetPoly) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&key) {
            Some(old) => {
                old.add_assign(c);
                if old.is_zero() {
                    self.coeffs.remove(&key);
                }
            }
            None => {
                self.coeffs.insert(key, c.clone());
            }
        }
    }

    pub fn add(&self, o: &TriVectorNF) -> TriVectorNF {
        let mut r = self.clone();
        for (k, c) in &o.coeffs {
            r.add_term(*k, c);
        }
        r
    }

    pub fn sub(&self, o: &TriVectorNF) -> TriVectorNF {
        self.add(&o.scale_q(&Q::int(-1)))
    }

    pub fn scale_q(&self, c: &Q) -> TriVectorNF {
        if c.is_zero() {
            return TriVectorNF::zero(self.n);
        }
        TriVectorNF { n: self.n, coeffs: self.coeffs.iter().map(|(k, v)| (*k, v.scale_q(c))).collect() }
    }

    /// First nonzero coefficient in key order, printed.
    pub fn first_offending(&self) -> Option<String> {
        self.coeffs.iter().next().map(|(k, v)| format!("C[{},{},{}]_({},{}) = {}", k.0 + 1, k.1 + 1, k.2 + 1, k.3, k.4, v))
    }

    /// Restriction to keys whose indices satisfy `pred`.
    pub fn filter_indices(&self, pred: &dyn Fn(usize, usize, usize) -> bool) -> TriVectorNF {
        TriVectorNF {
            n: self.n,
            coeffs: self.coeffs.iter().filter(|(k, _)| pred(k.0 as usize, k.1 as usize, k.2 as usize)).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }
}

impl fmt::Debug for TriVectorNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.coeffs {
            writeln!(f, "C[{},{},{}]_({},{}) = {}", k.0 + 1, k.1 + 1, k.2 + 1, k.3, k.4, v)?;
        }
        Ok(())
    }
}

/// Raw terms of `∫ x_i (pr_{Qz} P^{ij}) y_j`, keyed `(i, j, k, ord_y, ord_z)`
/// with `x` underived.
fn raw_prolonged(p: &MatDiffOp, q: &MatDiffOp) -> HashMap<(usize, usize, usize, usize, usize), JetPoly> {
    let n = p.size();
    let mut out: HashMap<(usize, usize, usize, usize, usize), JetPoly> = HashMap::new();
    let mut qders: HashMap<(usize, usize, usize), Vec<JetPoly>> = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            for (m, a) in p.entry(i, j).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (l, s) in a.dependencies(n) {
                    if l >= n {
                        continue;
                    }
                    let da = a.partial(l, s);
                    if da.is_zero() {
                        continue;
                    }
                    for k in 0..n {
                        for (nn, b) in q.entry(l, k).iter().enumerate() {
                            if b.is_zero() {
                                continue;
                            }
                            let ders = qders.entry((l, k, nn)).or_insert_with(|| vec![b.clone()]);
                            for r in 0..=(s as usize) {
                                while ders.len() <= r {
                                    let nx = ders.last().unwrap().total_x();
                                    ders.push(nx);
                                }
                                let d = &ders[r];
                                if d.is_zero() {
                                    continue;
                                }
                                let c = da.mul(d).scale_q(&Q::binomial(s, r as u32));
                                let key = (i, j, k, m, nn + s as usize - r);
                                out.entry(key).or_default().add_assign(&c);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn multinomial(r: u32, p: u32, q: u32, w: u32) -> Q {
    &(&Q::factorial(r) / &Q::factorial(p)) / &(&Q::factorial(q) * &Q::factorial(w))
}

/// Accumulates `∫ C a_i^(r) b_j^(s) c_k^(t)` into normal form by moving all
/// derivatives off `a`.
fn push_normalized(nf: &mut TriVectorNF, idx: (usize, usize, usize), ords: (usize, usize, usize), c: &JetPoly, cache: &mut Vec<JetPoly>) {
    let (r, s, t) = ords;
    if r == 0 {
        nf.add_term((idx.0 as u8, idx.1 as u8, idx.2 as u8, s as u8, t as u8), c);
        return;
    }
    cache.clear();
    cache.push(c.clone());
    for _ in 0..r {
        let nx = cache.last().unwrap().total_x();
        cache.push(nx);
    }
    let sign = if r % 2 == 1 { Q::int(-1) } else { Q::one() };
    for p in 0..=r {
        if cache[p].is_zero() {
            continue;
        }
        for q in 0..=(r - p) {
            let w = r - p - q;
            let coef = &sign * &multinomial(r as u32, p as u32, q as u32, w as u32);
            nf.add_term((idx.0 as u8, idx.1 as u8, idx.2 as u8, (s + q) as u8, (t + w) as u8), &cache[p].scale_q(&coef));
        }
    }
}

/// Cyclic sum of one ordered pair, added into `nf`.
fn add_cyclic(nf: &mut TriVectorNF, p: &MatDiffOp, q: &MatDiffOp) {
    let raw = raw_prolonged(p, q);
    let mut cache = Vec::new();
    let mut keys: Vec<_> = raw.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let c = &raw[&key];
        if c.is_zero() {
            continue;
        }
        let (ix, iy, iz, oy, oz) = key;
        // slots (x, y, z) = (a, b, c)
        push_normalized(nf, (ix, iy, iz), (0, oy, oz), c, &mut cache);
        // slots (x, y, z) = (c, a, b)
        push_normalized(nf, (iy, iz, ix), (oy, oz, 0), c, &mut cache);
        // slots (x, y, z) = (b, c, a)
        push_normalized(nf, (iz, ix, iy), (oz, 0, oy), c, &mut cache);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BracketError {
    #[error("operator is not skew-adjoint")]
    NotSkew,
    #[error(transparent)]
    Op(#[from] OpError),
}

/// `[P, Q]` without the skewness precheck.
pub fn schouten_unchecked(p: &MatDiffOp, q: &MatDiffOp) -> TriVectorNF {
    assert_eq!(p.size(), q.size(), "operator size mismatch");
    let mut nf = TriVectorNF::zero(p.size());
    add_cyclic(&mut nf, p, q);
    add_cyclic(&mut nf, q, p);
    nf
}

/// Schouten bracket `[P, Q]` of skew-adjoint operators.
pub fn schouten_bracket(p: &MatDiffOp, q: &MatDiffOp) -> Result<TriVectorNF, BracketError> {
    if p.size() != q.size() {
        return Err(OpError::SizeMismatch(p.size(), q.size()).into());
    }
    if !p.is_skew_adjoint() || !q.is_skew_adjoint() {
        return Err(BracketError::NotSkew);
    }
    Ok(schouten_unchecked(p, q))
}

/// Prolongation of every coefficient of `P` along `X`.
pub fn prolong_operator(x: &EvoField, p: &MatDiffOp) -> MatDiffOp {
    p.map_coeffs(&mut |c| x.prolong(c))
}

/// `Lie_X P = pr_X(P) − X'∘P − P∘X'†`.
pub fn lie_along_field(x: &EvoField, p: &MatDiffOp) -> MatDiffOp {
    let (l, la) = x.frechet_pair();
    let a = prolong_operator(x, p);
    let b = l.compose(p).expect("size");
    let c = p.compose(&la).expect("size");
    a.sub(&b).sub(&c)
}

/// Residual of one `(ε-order, λ-degree)` slot of `[Π, Π]`.
#[derive(Clone, Debug)]
pub struct PencilResidual {
    pub eps_order: usize,
    pub lambda_degree: usize,
    pub residual: TriVectorNF,
}

#[derive(Clone, Debug)]
pub struct PencilReport {
    pub residuals: Vec<PencilResidual>,
    /// Highest ε-order through which every residual vanishes, if any.
    pub vanishes_through: Option<usize>,
    pub checked_through: usize,
}

impl PencilReport {
    pub fn vanishes(&self) -> bool {
        self.vanishes_through == Some(self.checked_through)
    }

    pub fn first_failure(&self) -> Option<&PencilResidual> {
        self.residuals.iter().find(|r| !r.residual.is_zero())
    }
}

/// Expands `[Π_λ, Π_λ]` by ε-order (up to `max_order`) and λ-degree; the
/// overall factor 2 of the bilinear expansion is kept only between distinct
/// layers.
pub fn pencil_residuals(pi: &GradedPencil, max_order: usize) -> PencilReport {
    let n = pi.n;
    let mut residuals = Vec::new();
    let mut bracket_cache: HashMap<(usize, usize, usize, usize), TriVectorNF> = HashMap::new();
    let mut get = |k1: usize, w1: usize, k2: usize, w2: usize| -> TriVectorNF {
        let key = if (k1, w1) <= (k2, w2) { (k1, w1, k2, w2) } else { (k2, w2, k1, w1) };
        if let Some(v) = bracket_cache.get(&key) {
            return v.clone();
        }
        let (a1, b1) = pi.layer(key.0);
        let (a2, b2) = pi.layer(key.2);
        let p = if key.1 == 0 { a1 } else { b1 };
        let q = if key.3 == 0 { a2 } else { b2 };
        let v = if p.is_zero() || q.is_zero() { TriVectorNF::zero(n) } else { schouten_unchecked(&p, &q) };
        bracket_cache.insert(key, v.clone());
        v
    };
    let mut vanishes_through: Option<usize> = None;
    let mut broken = false;
    for m in 0..=max_order {
        let mut per_lambda = vec![TriVectorNF::zero(n); 3];
        for k1 in 0..=m {
            let k2 = m - k1;
            if k1 > k2 {
                continue;
            }
            let mult = if k1 == k2 { Q::one() } else { Q::int(2) };
            // (A1 − λB1, A2 − λB2): λ^0 AA, λ^1 −(AB + BA), λ^2 BB
            let aa = get(k1, 0, k2, 0);
            let ab = get(k1, 0, k2, 1);
            let ba = get(k1, 1, k2, 0);
            let bb = get(k1, 1, k2, 1);
            per_lambda[0] = per_lambda[0].add(&aa.scale_q(&mult));
            let mixed = if k1 == k2 { ab } else { ab.add(&ba) };
            let mm = if k1 == k2 { Q::int(-2) } else { Q::int(-2) };
            per_lambda[1] = per_lambda[1].add(&mixed.scale_q(&mm));
            per_lambda[2] = per_lambda[2].add(&bb.scale_q(&mult));
        }
        let ok = per_lambda.iter().all(|t| t.is_zero());
        for (d, t) in per_lambda.into_iter().enumerate() {
            residuals.push(PencilResidual { eps_order: m, lambda_degree: d, residual: t });
        }
        if ok && !broken {
            vanishes_through = Some(m);
        } else {
            broken = true;
        }
    }
    PencilReport { residuals, vanishes_through, checked_through: max_order }
}

/// Residual report of `[Π, Π]` through the pencil's truncation order.
pub fn is_poisson_pencil(pi: &GradedPencil) -> PencilReport {
    pencil_residuals(pi, pi.truncation.max(pi.max_layer()))
}

/// Report of `[ω₁, Lie_X ω₂]`.
#[derive(Clone, Debug)]
pub struct CocycleReport {
    pub q: MatDiffOp,
    pub residual: TriVectorNF,
}

impl CocycleReport {
    pub fn vanishes(&self) -> bool {
        self.residual.is_zero()
    }
}

pub fn cocycle_check_d1d2(x: &EvoField, omega1: &MatDiffOp, omega2: &MatDiffOp) -> CocycleReport {
    let q = lie_along_field(x, omega2);
    let residual = schouten_unchecked(omega1, &q);
    CocycleReport { q, residual }
}
