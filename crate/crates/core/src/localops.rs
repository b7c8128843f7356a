//! Matrix differential operators, hydrodynamic and Balinskiĭ–Novikov
//! operators, and ε-graded λ-linear pencils.

use crate::coefffield::{CoeffExpr, Field, FieldError};
use crate::jetspace::JetPoly;
use crate::rational::Q;
use std::fmt;

/// `Σ_m a_m ∂_x^m` stored densely by order.
pub type DiffEntry = Vec<JetPoly>;

fn trim(e: &mut DiffEntry) {
    while matches!(e.last(), Some(p) if p.is_zero()) {
        e.pop();
    }
}

fn entry_add(a: &[JetPoly], b: &[JetPoly]) -> DiffEntry {
    let n = a.len().max(b.len());
    let mut out: DiffEntry = (0..n)
        .map(|m| match (a.get(m), b.get(m)) {
            (Some(x), Some(y)) => x.add(y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => JetPoly::zero(),
        })
        .collect();
    trim(&mut out);
    out
}

/// `(Σ a_m ∂^m) ∘ (Σ b_k ∂^k)` by the Leibniz rule.
pub fn compose_entries(a: &[JetPoly], b: &[JetPoly]) -> DiffEntry {
    let mut out: DiffEntry = Vec::new();
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let maxm = a.len() - 1;
    let mut bders: Vec<Vec<JetPoly>> = b.iter().map(|bk| vec![bk.clone()]).collect();
    for (m, am) in a.iter().enumerate() {
        if am.is_zero() {
            continue;
        }
        for (k, bk) in b.iter().enumerate() {
            if bk.is_zero() {
                continue;
            }
            for r in 0..=m {
                while bders[k].len() <= r {
                    let nx = bders[k].last().unwrap().total_x();
                    bders[k].push(nx);
                }
                let d = &bders[k][r];
                if d.is_zero() {
                    continue;
                }
                let ord = m - r + k;
                if out.len() <= ord {
                    out.resize(ord + 1, JetPoly::zero());
                }
                let t = am.mul(d).scale_q(&Q::binomial(m as u32, r as u32));
                out[ord].add_assign(&t);
            }
        }
    }
    let _ = maxm;
    trim(&mut out);
    out
}

/// Formal adjoint of a scalar entry: `(a∂^m)† = (-∂)^m ∘ a`.
pub fn adjoint_entry(a: &[JetPoly]) -> DiffEntry {
    let mut out: DiffEntry = Vec::new();
    for (m, am) in a.iter().enumerate() {
        if am.is_zero() {
            continue;
        }
        let mut d = am.clone();
        for r in 0..=m {
            if r > 0 {
                d = d.total_x();
            }
            let ord = m - r;
            if out.len() <= ord {
                out.resize(ord + 1, JetPoly::zero());
            }
            let mut c = Q::binomial(m as u32, r as u32);
            if m % 2 == 1 {
                c = -c;
            }
            out[ord].add_assign(&d.scale_q(&c));
        }
    }
    trim(&mut out);
    out
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatDiffOp {
    n: usize,
    entries: Vec<DiffEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OpError {
    #[error("operator size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("degenerate metric: determinant vanishes")]
    DegenerateMetric,
    #[error("metric is not symmetric")]
    NotSymmetric,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("layer {layer} violates the degree/order pattern at entry ({i},{j}), order {order}")]
    Homogeneity { layer: usize, i: usize, j: usize, order: usize },
}

impl MatDiffOp {
    pub fn zero(n: usize) -> MatDiffOp {
        MatDiffOp { n, entries: vec![Vec::new(); n * n] }
    }

    pub fn identity(n: usize) -> MatDiffOp {
        let mut op = MatDiffOp::zero(n);
        for i in 0..n {
            op.add_entry(i, i, 0, &JetPoly::one());
        }
        op
    }

    /// `c^{ij} ∂_x^order` with constant or u-dependent coefficients.
    pub fn from_coeff_matrix(c: &[Vec<CoeffExpr>], order: usize) -> MatDiffOp {
        let n = c.len();
        let mut op = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                op.add_entry(i, j, order, &JetPoly::constant(c[i][j].clone()));
            }
        }
        op
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &[JetPoly] {
        &self.entries[i * self.n + j]
    }

    pub fn coeff(&self, i: usize, j: usize, m: usize) -> JetPoly {
        self.entry(i, j).get(m).cloned().unwrap_or_else(JetPoly::zero)
    }

    pub fn order(&self, i: usize, j: usize) -> Option<usize> {
        let e = self.entry(i, j);
        if e.is_empty() {
            None
        } else {
            Some(e.len() - 1)
        }
    }

    pub fn max_order(&self) -> usize {
        self.entries.iter().map(|e| e.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn add_entry(&mut self, i: usize, j: usize, m: usize, c: &JetPoly) {
        if c.is_zero() {
            return;
        }
        let e = &mut self.entries[i * self.n + j];
        if e.len() <= m {
            e.resize(m + 1, JetPoly::zero());
        }
        e[m].add_assign(c);
        trim(e);
    }

    pub fn set_entry(&mut self, i: usize, j: usize, e: DiffEntry) {
        let mut e = e;
        trim(&mut e);
        self.entries[i * self.n + j] = e;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_empty())
    }

    fn check(&self, o: &MatDiffOp) -> Result<(), OpError> {
        if self.n != o.n {
            Err(OpError::SizeMismatch(self.n, o.n))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, o: &MatDiffOp) -> MatDiffOp {
        assert_eq!(self.n, o.n, "operator size mismatch");
        MatDiffOp { n: self.n, entries: self.entries.iter().zip(&o.entries).map(|(a, b)| entry_add(a, b)).collect() }
    }

    pub fn sub(&self, o: &MatDiffOp) -> MatDiffOp {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> MatDiffOp {
        MatDiffOp { n: self.n, entries: self.entries.iter().map(|e| e.iter().map(|p| p.neg()).collect()).collect() }
    }

    pub fn scale(&self, c: &CoeffExpr) -> MatDiffOp {
        let mut entries: Vec<DiffEntry> = self.entries.iter().map(|e| e.iter().map(|p| p.scale(c)).collect()).collect();
        for e in entries.iter_mut() {
            trim(e);
        }
        MatDiffOp { n: self.n, entries }
    }

    pub fn scale_q(&self, c: &Q) -> MatDiffOp {
        self.scale(&CoeffExpr::constant(c.clone()))
    }

    /// Matrix composition with Leibniz expansion of each product.
    pub fn compose(&self, o: &MatDiffOp) -> Result<MatDiffOp, OpError> {
        self.check(o)?;
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc: DiffEntry = Vec::new();
                for k in 0..n {
                    let a = self.entry(i, k);
                    let b = o.entry(k, j);
                    if a.is_empty() || b.is_empty() {
                        continue;
                    }
                    acc = entry_add(&acc, &compose_entries(a, b));
                }
                out.set_entry(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Formal adjoint `(A†)^{ij} = (A^{ji})†`.
    pub fn adjoint(&self) -> MatDiffOp {
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.set_entry(i, j, adjoint_entry(self.entry(j, i)));
            }
        }
        out
    }

    pub fn transpose(&self) -> MatDiffOp {
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.set_entry(i, j, self.entry(j, i).to_vec());
            }
        }
        out
    }

    pub fn is_skew_adjoint(&self) -> bool {
        self.adjoint().add(self).is_zero()
    }

    /// `(A f)^i = Σ_j Σ_m a^{ij}_m ∂_x^m f_j`.
    pub fn apply(&self, f: &[JetPoly]) -> Vec<JetPoly> {
        let n = self.n;
        assert_eq!(f.len(), n);
        let maxo = self.max_order();
        let ders: Vec<Vec<JetPoly>> = f
            .iter()
            .map(|fj| {
                let mut v = vec![fj.clone()];
                for _ in 0..maxo {
                    let nx = v.last().unwrap().total_x();
                    v.push(nx);
                }
                v
            })
            .collect();
        (0..n)
            .map(|i| {
                let mut acc = JetPoly::zero();
                for j in 0..n {
                    for (m, a) in self.entry(i, j).iter().enumerate() {
                        if !a.is_zero() && !ders[j][m].is_zero() {
                            acc.add_assign(&a.mul(&ders[j][m]));
                        }
                    }
                }
                acc
            })
            .collect()
    }

    pub fn map_coeffs(&self, f: &mut dyn FnMut(&JetPoly) -> JetPoly) -> MatDiffOp {
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                let e: DiffEntry = self.entry(i, j).iter().map(|p| f(p)).collect();
                out.set_entry(i, j, e);
            }
        }
        out
    }

    pub fn try_map_coeffs<E>(&self, f: &mut dyn FnMut(&JetPoly) -> Result<JetPoly, E>) -> Result<MatDiffOp, E> {
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut e: DiffEntry = Vec::new();
                for p in self.entry(i, j) {
                    e.push(f(p)?);
                }
                out.set_entry(i, j, e);
            }
        }
        Ok(out)
    }

    /// Block embedding into a larger operator at offset `(r, c)`.
    pub fn embed(&self, size: usize, r: usize, c: usize) -> MatDiffOp {
        let mut out = MatDiffOp::zero(size);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set_entry(r + i, c + j, self.entry(i, j).to_vec());
            }
        }
        out
    }

    /// Coefficient matrix at order `m` if all of it is jet-free.
    pub fn jet_free_matrix(&self, m: usize) -> Option<Vec<Vec<CoeffExpr>>> {
        let n = self.n;
        let mut out = vec![vec![CoeffExpr::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                out[i][j] = self.coeff(i, j, m).as_coeff()?;
            }
        }
        Some(out)
    }

    /// One line per nonzero entry: `P[i][j] = c_m *dx^m + ...`.
    pub fn dump(&self, name: &str) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let e = self.entry(i, j);
                if e.is_empty() {
                    continue;
                }
                let mut parts: Vec<String> = Vec::new();
                for m in (0..e.len()).rev() {
                    if e[m].is_zero() {
                        continue;
                    }
                    let c = match e[m].as_coeff() {
                        Some(c) => c.to_string(),
                        None => e[m].to_string(),
                    };
                    parts.push(format!("({}) *dx^{}", c, m));
                }
                s.push_str(&format!("{}[{}][{}] = {}\n", name, i + 1, j + 1, parts.join(" + ")));
            }
        }
        s
    }
}

impl fmt::Debug for MatDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dump("P"))
    }
}

/// Determinant by cofactor expansion.
pub fn det(m: &[Vec<CoeffExpr>]) -> CoeffExpr {
    let n = m.len();
    match n {
        0 => CoeffExpr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        _ => {
            let mut acc = CoeffExpr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let t = m[0][j].mul(&det(&minor(m, 0, j)));
                acc = if j % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
            }
            acc
        }
    }
}

pub fn minor(m: &[Vec<CoeffExpr>], r: usize, c: usize) -> Vec<Vec<CoeffExpr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// Matrix inverse via the adjugate; the determinant must be admissible.
pub fn inverse(m: &[Vec<CoeffExpr>], field: &Field) -> Result<Vec<Vec<CoeffExpr>>, OpError> {
    let n = m.len();
    let d = det(m);
    if d.is_zero() {
        return Err(OpError::DegenerateMetric);
    }
    let di = field.inv(&d)?;
    let mut out = vec![vec![CoeffExpr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let c = if n == 1 { CoeffExpr::one() } else { det(&minor(m, j, i)) };
            let c = if (i + j) % 2 == 0 { c } else { c.neg() };
            out[i][j] = c.mul(&di);
        }
    }
    Ok(out)
}

pub fn mat_mul(a: &[Vec<CoeffExpr>], b: &[Vec<CoeffExpr>]) -> Vec<Vec<CoeffExpr>> {
    let n = a.len();
    let p = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut s = CoeffExpr::zero();
                    for l in 0..k {
                        if !a[i][l].is_zero() && !b[l][j].is_zero() {
                            s = s.add(&a[i][l].mul(&b[l][j]));
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Christoffel symbols `Γ^k_{ij}` (indexed `[k][i][j]`) of the Levi-Civita
/// connection of the contravariant metric `g`.
pub fn christoffel(g: &[Vec<CoeffExpr>], field: &Field) -> Result<Vec<Vec<Vec<CoeffExpr>>>, OpError> {
    let n = g.len();
    for i in 0..n {
        for j in 0..n {
            if !g[i][j].sub(&g[j][i]).is_zero() {
                return Err(OpError::NotSymmetric);
            }
        }
    }
    let gl = inverse(g, field)?;
    let dg: Vec<Vec<Vec<CoeffExpr>>> = (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| gl[a][b].partial(c)).collect()).collect()).collect();
    let mut gam = vec![vec![vec![CoeffExpr::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = CoeffExpr::zero();
                for l in 0..n {
                    if g[k][l].is_zero() {
                        continue;
                    }
                    let t = dg[l][j][i].add(&dg[l][i][j]).sub(&dg[i][j][l]);
                    s = s.add(&g[k][l].mul(&t));
                }
                gam[k][i][j] = s.scale(&Q::new(1, 2));
            }
        }
    }
    Ok(gam)
}

/// `P^{ij} = g^{ij} ∂_x − g^{il} Γ^j_{lk} u^k_x`.
pub fn hydro_operator(g: &[Vec<CoeffExpr>], field: &Field) -> Result<MatDiffOp, OpError> {
    let n = g.len();
    let mut op = MatDiffOp::zero(n);
    let constant = g.iter().all(|r| r.iter().all(|c| c.is_field_constant()));
    if constant {
        if det(g).is_zero() {
            return Err(OpError::DegenerateMetric);
        }
        return Ok(MatDiffOp::from_coeff_matrix(g, 1));
    }
    let gam = christoffel(g, field)?;
    for i in 0..n {
        for j in 0..n {
            op.add_entry(i, j, 1, &JetPoly::constant(g[i][j].clone()));
            let mut zero_order = JetPoly::zero();
            for k in 0..n {
                let mut s = CoeffExpr::zero();
                for l in 0..n {
                    if !g[i][l].is_zero() && !gam[j][l][k].is_zero() {
                        s = s.add(&g[i][l].mul(&gam[j][l][k]));
                    }
                }
                if !s.is_zero() {
                    zero_order.add_assign(&JetPoly::jet(k, 1).scale(&s.neg()));
                }
            }
            op.add_entry(i, j, 0, &zero_order);
        }
    }
    Ok(op)
}

/// Structure constants `b[i][j][k] = b^{ij}_k` with `e^i · e^j = Σ_k b^{ij}_k e^k`.
pub type StructureConstants = Vec<Vec<Vec<CoeffExpr>>>;

/// `P^{ij} = (b^{ij}_k + b^{ji}_k) u^k ∂_x + b^{ij}_k u^k_x`.
pub fn bn_operator(b: &StructureConstants) -> MatDiffOp {
    let n = b.len();
    let mut op = MatDiffOp::zero(n);
    for i in 0..n {
        for j in 0..n {
            let mut c1 = CoeffExpr::zero();
            let mut c0 = JetPoly::zero();
            for k in 0..n {
                let s = b[i][j][k].add(&b[j][i][k]);
                c1 = c1.add(&s.mul(&CoeffExpr::var(k)));
                c0.add_assign(&JetPoly::jet(k, 1).scale(&b[i][j][k]));
            }
            op.add_entry(i, j, 1, &JetPoly::constant(c1));
            op.add_entry(i, j, 0, &c0);
        }
    }
    op
}

/// The contravariant metric `g^{ij} = (b^{ij}_k + b^{ji}_k) u^k`.
pub fn bn_metric(b: &StructureConstants) -> Vec<Vec<CoeffExpr>> {
    let n = b.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut c = CoeffExpr::zero();
                    for k in 0..n {
                        c = c.add(&b[i][j][k].add(&b[j][i][k]).mul(&CoeffExpr::var(k)));
                    }
                    c
                })
                .collect()
        })
        .collect()
}

fn product(b: &StructureConstants, x: &[CoeffExpr], y: &[CoeffExpr]) -> Vec<CoeffExpr> {
    let n = b.len();
    let mut out = vec![CoeffExpr::zero(); n];
    for i in 0..n {
        for j in 0..n {
            let c = x[i].mul(&y[j]);
            if c.is_zero() {
                continue;
            }
            for k in 0..n {
                out[k] = out[k].add(&c.mul(&b[i][j][k]));
            }
        }
    }
    out
}

fn basis(n: usize, i: usize) -> Vec<CoeffExpr> {
    (0..n).map(|k| if k == i { CoeffExpr::one() } else { CoeffExpr::zero() }).collect()
}

/// Checks `a·(b·c) = b·(a·c)` and `(a·b)·c − a·(b·c) = (a·c)·b − a·(c·b)`
/// on all basis triples, where `a·b` is read off the transposed
/// characteristic matrix (`e^i·e^j = Σ_k b^{ji}_k e^k`).
pub fn bn_axioms_hold(b: &StructureConstants) -> bool {
    let n = b.len();
    let product = |x: &[CoeffExpr], y: &[CoeffExpr]| product(b, y, x);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (a, bb, c) = (basis(n, i), basis(n, j), basis(n, k));
                let l1 = product(&a, &product(&bb, &c));
                let r1 = product(&bb, &product(&a, &c));
                let l2: Vec<CoeffExpr> = product(&product(&a, &bb), &c).iter().zip(product(&a, &product(&bb, &c))).map(|(x, y)| x.sub(&y)).collect();
                let r2: Vec<CoeffExpr> = product(&product(&a, &c), &bb).iter().zip(product(&a, &product(&c, &bb))).map(|(x, y)| x.sub(&y)).collect();
                for t in 0..n {
                    if !l1[t].sub(&r1[t]).is_zero() || !l2[t].sub(&r2[t]).is_zero() {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Checks `η(e^i·e^j, e^k) = η(e^i, e^k·e^j)` with `η(x, y) = Σ x_a η^{ab} y_b`.
pub fn form_is_invariant(b: &StructureConstants, eta: &[Vec<CoeffExpr>]) -> bool {
    let n = b.len();
    let pair = |x: &[CoeffExpr], y: &[CoeffExpr]| {
        let mut s = CoeffExpr::zero();
        for a in 0..n {
            for c in 0..n {
                s = s.add(&x[a].mul(&eta[a][c]).mul(&y[c]));
            }
        }
        s
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let l = pair(&product(b, &basis(n, i), &basis(n, j)), &basis(n, k));
                let r = pair(&basis(n, i), &product(b, &basis(n, k), &basis(n, j)));
                if !l.sub(&r).is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// `Π = Σ_k ε^k (A_k − λ B_k)`, truncated at ε-order `truncation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedPencil {
    pub n: usize,
    pub layers: Vec<(MatDiffOp, MatDiffOp)>,
    pub truncation: usize,
}

pub const DEFAULT_TRUNCATION: usize = 3;

/// Default ε-order, overridable through `PENCILFORGE_TRUNCATION`.
pub fn default_truncation() -> usize {
    std::env::var("PENCILFORGE_TRUNCATION").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_TRUNCATION)
}

impl GradedPencil {
    /// `ω₂ − λω₁` with no deformation.
    pub fn new(omega2: MatDiffOp, omega1: MatDiffOp, truncation: usize) -> GradedPencil {
        let n = omega2.size();
        GradedPencil { n, layers: vec![(omega2, omega1)], truncation }
    }

    pub fn layer(&self, k: usize) -> (MatDiffOp, MatDiffOp) {
        self.layers.get(k).cloned().unwrap_or_else(|| (MatDiffOp::zero(self.n), MatDiffOp::zero(self.n)))
    }

    /// Adds `ε^k (a − λ b)`.
    pub fn add_layer(&mut self, k: usize, a: &MatDiffOp, b: &MatDiffOp) {
        while self.layers.len() <= k {
            self.layers.push((MatDiffOp::zero(self.n), MatDiffOp::zero(self.n)));
        }
        let (x, y) = &self.layers[k];
        self.layers[k] = (x.add(a), y.add(b));
    }

    pub fn max_layer(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    /// Each ε^k layer, k ≥ 1, must carry degree-l coefficients exactly on ∂^{k−l+1}.
    pub fn audit_homogeneity(&self) -> Result<(), OpError> {
        for (k, (a, b)) in self.layers.iter().enumerate().skip(1) {
            for op in [a, b] {
                for i in 0..self.n {
                    for j in 0..self.n {
                        for (m, c) in op.entry(i, j).iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            let l = k as i32 + 1 - m as i32;
                            if l < 0 || !c.is_homogeneous(l) {
                                return Err(OpError::Homogeneity { layer: k, i, j, order: m });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_skew(&self) -> bool {
        self.layers.iter().all(|(a, b)| a.is_skew_adjoint() && b.is_skew_adjoint())
    }
}
