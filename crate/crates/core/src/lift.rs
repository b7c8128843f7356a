//! Complete lifts to the tangent bundle: finite-dimensional tensors and
//! connections, loop-space operators, functionals and evolutionary fields.
//!
//! Lifted objects use `2n` components with fibre coordinates `v^i = u^(n+i)`.

use crate::brackets::{schouten_unchecked, TriVectorNF};
use crate::catalog::{case_data, deformation_field, swap_pencil, CaseId, CatalogError, Params};
use crate::coefffield::{CoeffExpr, FieldError};
use crate::jetspace::{EvoField, JetPoly};
use crate::localops::{det, GradedPencil, MatDiffOp, OpError};
use crate::miura::{exp_ad_flow, hamiltonian_vector_field};
use crate::rational::Q;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum LiftError {
    #[error("input depends on fibre variables")]
    FibreDependence,
    #[error("expected {expected} components, got {got}")]
    Size { expected: usize, got: usize },
    #[error("unsupported tensor kind `{0}`")]
    UnsupportedKind(String),
    #[error("bracket on one-forms needs constant coefficients")]
    NotConstant,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Invariants(#[from] crate::invariants::InvError),
}

/// `v^k` as a jet-free polynomial.
pub fn fibre(n: usize, k: usize) -> JetPoly {
    JetPoly::constant(CoeffExpr::var(n + k))
}

/// Evolutionary field `(v^1, …, v^n)` whose prolongation is the lifting derivation.
pub fn fibre_field(n: usize) -> EvoField {
    EvoField::new((0..n).map(|k| fibre(n, k)).collect())
}

/// `Σ_{k,t} v^k_(t) ∂f/∂u^k_(t)`.
pub fn v_derivation(n: usize, f: &JetPoly) -> JetPoly {
    fibre_field(n).prolong(f)
}

/// `Σ_k v^k ∂c/∂u^k`.
pub fn v_derivation_coeff(n: usize, c: &CoeffExpr) -> CoeffExpr {
    let mut s = CoeffExpr::zero();
    for k in 0..n {
        let d = c.partial(k);
        if !d.is_zero() {
            s = s.add(&CoeffExpr::var(n + k).mul(&d));
        }
    }
    s
}

fn base_only(n: usize, f: &JetPoly) -> Result<(), LiftError> {
    if f.comp_span() > n {
        Err(LiftError::FibreDependence)
    } else {
        Ok(())
    }
}

fn base_only_coeff(n: usize, c: &CoeffExpr) -> Result<(), LiftError> {
    if c.var_span() > n {
        Err(LiftError::FibreDependence)
    } else {
        Ok(())
    }
}

/// Lifted operator `[[0, P], [P, Σ v^k_(t) ∂P/∂u^k_(t)]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedOp {
    pub n: usize,
    pub op: MatDiffOp,
}

impl LiftedOp {
    fn block(&self, r: usize, c: usize) -> MatDiffOp {
        let n = self.n;
        let mut out = MatDiffOp::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.set_entry(i, j, self.op.entry(r * n + i, c * n + j).to_vec());
            }
        }
        out
    }

    pub fn base_block(&self) -> MatDiffOp {
        self.block(0, 1)
    }

    pub fn fibre_block(&self) -> MatDiffOp {
        self.block(1, 1)
    }

    /// Zero top-left block, equal off-diagonal blocks free of fibre variables,
    /// bottom-right block the lifting derivation of the off-diagonal one.
    pub fn has_block_form(&self) -> bool {
        let p = self.base_block();
        let fibre_free = (0..self.n).all(|i| (0..self.n).all(|j| p.entry(i, j).iter().all(|c| c.comp_span() <= self.n)));
        self.block(0, 0).is_zero() && self.block(1, 0) == p && fibre_free && self.fibre_block() == p.map_coeffs(&mut |c| v_derivation(self.n, c))
    }
}

pub fn lift_operator(p: &MatDiffOp) -> Result<LiftedOp, LiftError> {
    let n = p.size();
    for i in 0..n {
        for j in 0..n {
            for c in p.entry(i, j) {
                base_only(n, c)?;
            }
        }
    }
    let d = p.map_coeffs(&mut |c| v_derivation(n, c));
    let op = p.embed(2 * n, 0, n).add(&p.embed(2 * n, n, 0)).add(&d.embed(2 * n, n, n));
    Ok(LiftedOp { n, op })
}

/// Layerwise lift of a graded pencil.
pub fn lift_pencil(pi: &GradedPencil) -> Result<GradedPencil, LiftError> {
    let mut layers = Vec::with_capacity(pi.layers.len());
    for (a, b) in &pi.layers {
        layers.push((lift_operator(a)?.op, lift_operator(b)?.op));
    }
    Ok(GradedPencil { n: 2 * pi.n, layers, truncation: pi.truncation })
}

/// Density `v^j δH/δu^j` of the lifted functional.
pub fn lift_density(n: usize, h: &JetPoly) -> Result<JetPoly, LiftError> {
    base_only(n, h)?;
    let mut out = JetPoly::zero();
    for (j, g) in h.variational_gradient(n).iter().enumerate() {
        out.add_assign(&fibre(n, j).mul(g));
    }
    Ok(out)
}

/// `X̂ = (X^i, Σ v^j_(k) ∂X^i/∂u^j_(k))`.
pub fn lift_field(x: &EvoField) -> Result<EvoField, LiftError> {
    let n = x.n();
    let mut comps = x.comps.clone();
    for c in &x.comps {
        base_only(n, c)?;
        comps.push(v_derivation(n, c));
    }
    Ok(EvoField::new(comps))
}

/// `lift(PδH) − P̂δĤ`; vanishes identically.
pub fn hamiltonian_lift_defect(p: &MatDiffOp, h: &JetPoly) -> Result<EvoField, LiftError> {
    let n = p.size();
    let a = lift_field(&hamiltonian_vector_field(p, h))?;
    let b = hamiltonian_vector_field(&lift_operator(p)?.op, &lift_density(n, h)?);
    Ok(a.sub(&b))
}

/// `ξ'(Pη) − η'(Pξ)` for a constant-coefficient operator `P`.
pub fn one_form_bracket(p: &MatDiffOp, xi: &[JetPoly], eta: &[JetPoly]) -> Result<Vec<JetPoly>, LiftError> {
    let n = p.size();
    if xi.len() != n || eta.len() != n {
        return Err(LiftError::Size { expected: n, got: xi.len().min(eta.len()) });
    }
    for i in 0..n {
        for j in 0..n {
            if p.entry(i, j).iter().any(|c| c.as_coeff().map(|e| !e.is_field_constant()).unwrap_or(true)) {
                return Err(LiftError::NotConstant);
            }
        }
    }
    let pe = EvoField::new(p.apply(eta));
    let px = EvoField::new(p.apply(xi));
    Ok((0..n).map(|j| pe.prolong(&xi[j]).sub(&px.prolong(&eta[j]))).collect())
}

/// Variational gradient of `{H_ξ, H_η}_P̂ − ∫⟨v, {ξ, η}_P⟩`, with `H_ξ = ∫⟨ξ, v⟩`.
pub fn one_form_lift_defect(p: &MatDiffOp, xi: &[JetPoly], eta: &[JetPoly]) -> Result<Vec<JetPoly>, LiftError> {
    let n = p.size();
    let br = one_form_bracket(p, xi, eta)?;
    let lp = lift_operator(p)?.op;
    let pair = |f: &[JetPoly]| {
        let mut s = JetPoly::zero();
        for (k, c) in f.iter().enumerate() {
            s.add_assign(&c.mul(&fibre(n, k)));
        }
        s
    };
    let gx = pair(xi).variational_gradient(2 * n);
    let ge = pair(eta).variational_gradient(2 * n);
    let mut dens = JetPoly::zero();
    for (a, b) in gx.iter().zip(lp.apply(&ge)) {
        dens.add_assign(&a.mul(&b));
    }
    let d = dens.sub(&pair(&br));
    Ok(d.variational_gradient(2 * n))
}

/// Trivector components grouped by the number of fibre indices (0..=3).
pub fn fibre_index_patterns(t: &TriVectorNF, n: usize) -> [TriVectorNF; 4] {
    let count = |i: usize, j: usize, k: usize| [i, j, k].iter().filter(|&&a| a >= n).count();
    [0, 1, 2, 3].map(|m| t.filter_indices(&|i, j, k| count(i, j, k) == m))
}

/// `[P̂, Q̂]`.
pub fn lifted_schouten(p: &MatDiffOp, q: &MatDiffOp) -> Result<TriVectorNF, LiftError> {
    Ok(schouten_unchecked(&lift_operator(p)?.op, &lift_operator(q)?.op))
}

/// Finite-dimensional tensor kinds with a complete lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TensorKind {
    Function,
    OneForm,
    Vector,
    Bilinear,
    Trilinear,
    Endomorphism,
    Product,
    Bivector,
    Connection,
}

impl TensorKind {
    /// `(contravariant, covariant)` valence.
    pub fn valence(self) -> (usize, usize) {
        match self {
            TensorKind::Function => (0, 0),
            TensorKind::OneForm => (0, 1),
            TensorKind::Vector => (1, 0),
            TensorKind::Bilinear => (0, 2),
            TensorKind::Trilinear => (0, 3),
            TensorKind::Endomorphism => (1, 1),
            TensorKind::Product | TensorKind::Connection => (1, 2),
            TensorKind::Bivector => (2, 0),
        }
    }
}

impl FromStr for TensorKind {
    type Err = LiftError;
    fn from_str(s: &str) -> Result<TensorKind, LiftError> {
        Ok(match s {
            "function" => TensorKind::Function,
            "one-form" => TensorKind::OneForm,
            "vector" => TensorKind::Vector,
            "bilinear" => TensorKind::Bilinear,
            "trilinear" => TensorKind::Trilinear,
            "endomorphism" => TensorKind::Endomorphism,
            "product" => TensorKind::Product,
            "bivector" => TensorKind::Bivector,
            "connection" => TensorKind::Connection,
            _ => return Err(LiftError::UnsupportedKind(s.to_string())),
        })
    }
}

/// Components `T^{i…}_{j…}` stored row-major, contravariant indices first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub n: usize,
    pub up: usize,
    pub down: usize,
    pub comps: Vec<CoeffExpr>,
}

impl Tensor {
    pub fn new(n: usize, up: usize, down: usize, comps: Vec<CoeffExpr>) -> Result<Tensor, LiftError> {
        let expected = n.pow((up + down) as u32);
        if comps.len() != expected {
            return Err(LiftError::Size { expected, got: comps.len() });
        }
        Ok(Tensor { n, up, down, comps })
    }

    pub fn zero(n: usize, up: usize, down: usize) -> Tensor {
        Tensor { n, up, down, comps: vec![CoeffExpr::zero(); n.pow((up + down) as u32)] }
    }

    pub fn from_matrix(up: usize, down: usize, m: &[Vec<CoeffExpr>]) -> Tensor {
        Tensor { n: m.len(), up, down, comps: m.iter().flatten().cloned().collect() }
    }

    /// Connection coefficients `Γ[i][j][k] = Γ^i_{jk}`.
    pub fn from_cube(c: &[Vec<Vec<CoeffExpr>>]) -> Tensor {
        Tensor { n: c.len(), up: 1, down: 2, comps: c.iter().flatten().flatten().cloned().collect() }
    }

    pub fn rank(&self) -> usize {
        self.up + self.down
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &CoeffExpr {
        &self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], c: CoeffExpr) {
        let o = self.offset(idx);
        self.comps[o] = c;
    }

    pub fn to_matrix(&self) -> Vec<Vec<CoeffExpr>> {
        self.comps.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn indices(&self) -> Vec<Vec<usize>> {
        let r = self.rank();
        (0..self.comps.len())
            .map(|mut o| {
                let mut idx = vec![0; r];
                for a in (0..r).rev() {
                    idx[a] = o % self.n;
                    o /= self.n;
                }
                idx
            })
            .collect()
    }
}

/// Complete lift of a tensor field or connection.
///
/// A lifted component is `T` when exactly `rank − 1` of its indices are
/// contravariant-base or covariant-fibre, `v^h∂_hT` when `rank` of them are,
/// and zero otherwise.
pub fn lift_tensor(t: &Tensor) -> Result<Tensor, LiftError> {
    let n = t.n;
    for c in &t.comps {
        base_only_coeff(n, c)?;
    }
    let mut out = Tensor::zero(2 * n, t.up, t.down);
    let rank = t.rank() as i64;
    for idx in out.indices() {
        let fibre_up = idx[..t.up].iter().filter(|&&a| a >= n).count() as i64;
        let base_down = idx[t.up..].iter().filter(|&&a| a < n).count() as i64;
        let base: Vec<usize> = idx.iter().map(|&a| a % n).collect();
        let c = t.get(&base);
        let v = match fibre_up + base_down - (rank - 1) {
            0 => c.clone(),
            1 => v_derivation_coeff(n, c),
            _ => continue,
        };
        out.set(&idx, v);
    }
    Ok(out)
}

/// Flat-component interface to [`lift_tensor`].
pub fn lift_finite_tensor(kind: TensorKind, n: usize, comps: &[CoeffExpr]) -> Result<Vec<CoeffExpr>, LiftError> {
    let (up, down) = kind.valence();
    Ok(lift_tensor(&Tensor::new(n, up, down, comps.to_vec())?)?.comps)
}

/// Full contraction `T(α_1, …, X_1, …)` with one-forms and vector fields.
pub fn contract(t: &Tensor, forms: &[Vec<CoeffExpr>], vectors: &[Vec<CoeffExpr>]) -> CoeffExpr {
    assert_eq!((forms.len(), vectors.len()), (t.up, t.down));
    let mut s = CoeffExpr::zero();
    for (idx, c) in t.indices().iter().zip(&t.comps) {
        if c.is_zero() {
            continue;
        }
        let mut term = c.clone();
        for (a, &i) in idx.iter().enumerate() {
            let f = if a < t.up { &forms[a][i] } else { &vectors[a - t.up][i] };
            term = term.mul(f);
            if term.is_zero() {
                break;
            }
        }
        s = s.add(&term);
    }
    s
}

/// Curvature `R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}`.
pub fn curvature(gamma: &Tensor) -> Tensor {
    let n = gamma.n;
    let mut r = Tensor::zero(n, 1, 3);
    for idx in r.indices() {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let mut s = gamma.get(&[i, l, j]).partial(k).sub(&gamma.get(&[i, k, j]).partial(l));
        for m in 0..n {
            s = s.add(&gamma.get(&[i, k, m]).mul(gamma.get(&[m, l, j])));
            s = s.sub(&gamma.get(&[i, l, m]).mul(gamma.get(&[m, k, j])));
        }
        r.set(&idx, s);
    }
    r
}

/// `(∇g)_{kij} = ∂_k g_{ij} − Γ^m_{ki} g_{mj} − Γ^m_{kj} g_{im}` for a covariant bilinear form.
pub fn covariant_derivative_bilinear(g: &Tensor, gamma: &Tensor) -> Tensor {
    let n = g.n;
    let mut out = Tensor::zero(n, 0, 3);
    for idx in out.indices() {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut s = g.get(&[i, j]).partial(k);
        for m in 0..n {
            s = s.sub(&gamma.get(&[m, k, i]).mul(g.get(&[m, j])));
            s = s.sub(&gamma.get(&[m, k, j]).mul(g.get(&[i, m])));
        }
        out.set(&idx, s);
    }
    out
}

/// Sign `s` with `det ĝ = s·(det g)²`, when the identity holds.
pub fn lifted_det_sign(g: &[Vec<CoeffExpr>]) -> Result<Option<i64>, LiftError> {
    let lg = lift_tensor(&Tensor::from_matrix(0, 2, g))?.to_matrix();
    let (d, d2) = (det(&lg), det(g).pow(2));
    Ok(if d == d2 {
        Some(1)
    } else if d == d2.neg() {
        Some(-1)
    } else {
        None
    })
}

/// Outcome of the scalar lift comparison for one `f`.
#[derive(Clone, Debug)]
pub struct ScalarLiftRecord {
    pub f: CoeffExpr,
    pub checks: Vec<(String, bool)>,
}

impl ScalarLiftRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

/// `2u∂ + u_x − λ∂ + ε²(2s∂³ + 3s_x∂² + s_xx∂)` with `s = s(u)`.
pub fn scalar_pencil(s: &CoeffExpr, truncation: usize) -> GradedPencil {
    let u = JetPoly::u(0);
    let mut w2 = MatDiffOp::zero(1);
    w2.add_entry(0, 0, 1, &u.scale_q(&Q::int(2)));
    w2.add_entry(0, 0, 0, &JetPoly::jet(0, 1));
    let mut w1 = MatDiffOp::zero(1);
    w1.add_entry(0, 0, 1, &JetPoly::one());
    let sp = JetPoly::constant(s.clone());
    let sx = sp.total_x();
    let mut d = MatDiffOp::zero(1);
    d.add_entry(0, 0, 3, &sp.scale_q(&Q::int(2)));
    d.add_entry(0, 0, 2, &sx.scale_q(&Q::int(3)));
    d.add_entry(0, 0, 1, &sx.total_x());
    let mut p = GradedPencil::new(w2, w1, truncation);
    p.add_layer(2, &d, &MatDiffOp::zero(1));
    p
}

/// Generator `Y` of the reduction of the N3 deformation with `F₂ = −f/u¹` to a lift.
pub fn scalar_reduction_field(f: &CoeffExpr) -> EvoField {
    let f1 = JetPoly::constant(f.partial(0).scale(&Q::new(1, 3)));
    let f2 = JetPoly::constant(f.partial(0).partial(0).scale(&Q::new(1, 3)));
    let (ux, vx) = (JetPoly::jet(0, 1), JetPoly::jet(1, 1));
    EvoField::new(vec![
        f1.mul(&JetPoly::jet(0, 2)).add(&f2.mul(&ux.pow(2))),
        f2.neg().mul(&ux).mul(&vx).sub(&f1.mul(&JetPoly::jet(1, 2))),
    ])
}

/// Lift of the scalar deformation versus the reduced N3 deformation with
/// `η²² = 0`, `η¹² = 1`, `F₁ = 0`, `F₂ = −f(u¹)/u¹`, in the frame `u¹ = u`, `u² = v`.
pub fn scalar_lift_demo(f: &CoeffExpr) -> Result<ScalarLiftRecord, LiftError> {
    let cc = case_data(&CaseId::N3, &Params::numeric(Q::one(), Q::zero()))?;
    let f2 = cc.field.div(&f.neg(), &CoeffExpr::var(0))?;
    let x = deformation_field(&cc, &[CoeffExpr::zero(), f2])?;
    let pi = swap_pencil(&cc.deformed_pencil(&x, 2));
    let reduced = exp_ad_flow(&scalar_reduction_field(f).neg(), &pi, 2);
    let lifted = lift_pencil(&scalar_pencil(f, 2))?;
    let mut checks = vec![("dispersionless layer is the lifted pencil".to_string(), pi.layer(0) == lifted.layer(0))];
    checks.push(("reduced first layer vanishes".to_string(), { let (a, b) = reduced.layer(1); a.is_zero() && b.is_zero() }));
    checks.push(("reduced second layer is the lifted deformation".to_string(), reduced.layer(2) == lifted.layer(2)));
    let sym = crate::invariants::symbol_matrix(&scalar_pencil(f, 2))?;
    let lsym = crate::invariants::symbol_matrix(&lifted)?;
    let d = crate::invariants::lp_det(&sym);
    let ld = crate::invariants::lp_det(&lsym);
    checks.push(("lifted symbol determinant is −(det)²".to_string(), ld == crate::invariants::lp_neg(&crate::invariants::lp_mul(&d, &d))));
    Ok(ScalarLiftRecord { f: f.clone(), checks })
}
