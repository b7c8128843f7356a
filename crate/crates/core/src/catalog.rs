//! Two-dimensional Balinskiĭ–Novikov algebras, their invariant forms and
//! metric pairs, and the closed-form deformation families built on them.

use crate::brackets::lie_along_field;
use crate::coefffield::{AtomKind, CoeffExpr, Field, FieldError};
use crate::coefffield::atoms;
use crate::invariants::InvError;
use crate::jetspace::{jet_var, EvoField, JetPoly};
use crate::localops::{bn_metric, bn_operator, inverse, mat_mul, GradedPencil, MatDiffOp, OpError, StructureConstants};
use crate::miura::hamiltonian_vector_field;
use crate::rational::Q;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CaseId {
    T1,
    T2,
    T3,
    N1,
    N2,
    N3,
    N4,
    N5,
    N6(Q),
}

impl CaseId {
    /// Nonsemisimple metric pairs, with κ ∈ {3, −2, −1/2} for N6.
    pub fn metric_pairs() -> Vec<CaseId> {
        use CaseId::*;
        vec![T3, N3, N4, N5, N6(Q::int(3)), N6(Q::int(-2)), N6(Q::new(-1, 2))]
    }

    pub fn novikov_algebras() -> Vec<CaseId> {
        use CaseId::*;
        vec![T1, T2, T3, N1, N2, N3, N4, N5, N6(Q::int(3))]
    }

    /// Accepts `T3`, `N6(-2)`, `N6:-2`, `N6k=3`.
    pub fn parse(s: &str) -> Option<CaseId> {
        let t = s.trim();
        let up = t.to_ascii_uppercase();
        let simple = match up.as_str() {
            "T1" => Some(CaseId::T1),
            "T2" => Some(CaseId::T2),
            "T3" => Some(CaseId::T3),
            "N1" => Some(CaseId::N1),
            "N2" => Some(CaseId::N2),
            "N3" => Some(CaseId::N3),
            "N4" => Some(CaseId::N4),
            "N5" => Some(CaseId::N5),
            _ => None,
        };
        if simple.is_some() {
            return simple;
        }
        let rest = up.strip_prefix("N6")?;
        let rest = rest.trim_start_matches(['(', ':', '=', 'K', ' ']).trim_end_matches([')', ' ']);
        let rest = rest.trim_start_matches('=');
        Q::parse(rest).map(CaseId::N6)
    }

    pub fn kappa(&self) -> Option<Q> {
        match self {
            CaseId::N6(k) => Some(k.clone()),
            CaseId::N4 => Some(Q::zero()),
            CaseId::N3 => Some(Q::one()),
            _ => None,
        }
    }

    /// Cases that carry a metric pair.
    pub fn is_pair(&self) -> bool {
        matches!(self, CaseId::T3 | CaseId::N3 | CaseId::N4 | CaseId::N5 | CaseId::N6(_))
    }

    /// Two- or four-function second-order family.
    pub fn arity(&self) -> Option<usize> {
        match self {
            CaseId::T3 | CaseId::N3 | CaseId::N5 => Some(2),
            CaseId::N4 => Some(4),
            CaseId::N6(k) if *k == Q::int(-2) || k.is_zero() => Some(4),
            CaseId::N6(k) if *k == Q::int(-1) => None,
            CaseId::N6(_) => Some(2),
            _ => None,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseId::N6(k) => write!(f, "N6({})", k),
            other => write!(f, "{:?}", other),
        }
    }
}

impl std::str::FromStr for CaseId {
    type Err = CatalogError;
    fn from_str(s: &str) -> Result<CaseId, CatalogError> {
        CaseId::parse(s).ok_or_else(|| CatalogError::Constraint(format!("unknown case `{}`", s)))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{0}")]
    Constraint(String),
    #[error("case {0} excluded: {1}")]
    Excluded(String, String),
    #[error("non-integrable instantiation: {0}")]
    NotIntegrable(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Inv(#[from] InvError),
}

/// Constants of the invariant form.
#[derive(Clone, Debug)]
pub struct Params {
    pub eta11: CoeffExpr,
    pub eta12: CoeffExpr,
    pub eta21: CoeffExpr,
    pub eta22: CoeffExpr,
}

impl Params {
    pub fn symbolic() -> Params {
        Params {
            eta11: CoeffExpr::param("eta11"),
            eta12: CoeffExpr::param("eta12"),
            eta21: CoeffExpr::param("eta21"),
            eta22: CoeffExpr::param("eta22"),
        }
    }

    pub fn numeric(eta12: Q, eta22: Q) -> Params {
        Params {
            eta11: CoeffExpr::constant(eta22.clone()),
            eta12: CoeffExpr::constant(eta12.clone()),
            eta21: CoeffExpr::constant(eta12),
            eta22: CoeffExpr::constant(eta22),
        }
    }

    /// Symbolic η with the given entries fixed to rationals.
    pub fn partial(eta12: Option<Q>, eta22: Option<Q>) -> Params {
        let mut p = Params::symbolic();
        if let Some(a) = eta12 {
            p.eta12 = CoeffExpr::constant(a.clone());
            p.eta21 = CoeffExpr::constant(a);
        }
        if let Some(b) = eta22 {
            p.eta22 = CoeffExpr::constant(b.clone());
            p.eta11 = CoeffExpr::constant(b);
        }
        p
    }

    pub fn bindings(&self) -> Vec<(String, String)> {
        vec![
            ("eta11".into(), self.eta11.to_string()),
            ("eta12".into(), self.eta12.to_string()),
            ("eta21".into(), self.eta21.to_string()),
            ("eta22".into(), self.eta22.to_string()),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PencilKind {
    Semisimple,
    NonSemisimple,
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct CatalogCase {
    pub id: CaseId,
    pub field: Field,
    pub b: StructureConstants,
    pub eta: Vec<Vec<CoeffExpr>>,
    pub g2: Vec<Vec<CoeffExpr>>,
    pub omega1: MatDiffOp,
    pub omega2: MatDiffOp,
    /// Affinor `L = g₂η⁻¹`, when tabulated.
    pub affinor: Option<Vec<Vec<CoeffExpr>>>,
    pub lambda_hat: Option<CoeffExpr>,
    pub kind: PencilKind,
    /// Coordinates are the swap of the N6(κ=1) frame.
    pub swapped: bool,
    pub params: Params,
}

fn c(e: CoeffExpr) -> JetPoly {
    JetPoly::constant(e)
}

fn ux(i: usize) -> JetPoly {
    JetPoly::jet(i, 1)
}

fn uxx(i: usize) -> JetPoly {
    JetPoly::jet(i, 2)
}

fn u(i: usize) -> CoeffExpr {
    CoeffExpr::var(i)
}

fn q(n: i64) -> CoeffExpr {
    CoeffExpr::int(n)
}

fn constants(table: &[(usize, usize, usize, CoeffExpr)]) -> StructureConstants {
    let mut b = vec![vec![vec![CoeffExpr::zero(); 2]; 2]; 2];
    for (i, j, k, v) in table {
        b[*i][*j][*k] = v.clone();
    }
    b
}

/// Structure constants read from the characteristic matrix (row i, column j).
pub fn structure_constants(id: &CaseId) -> StructureConstants {
    use CaseId::*;
    match id {
        T1 => constants(&[]),
        T2 => constants(&[(0, 0, 1, q(1))]),
        T3 => constants(&[(1, 0, 0, q(-1))]),
        N1 => constants(&[(0, 0, 0, q(1)), (1, 1, 1, q(1))]),
        N2 => constants(&[(0, 0, 0, q(1))]),
        N3 => constants(&[(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))]),
        N4 => constants(&[(0, 1, 0, q(1)), (1, 1, 1, q(1))]),
        N5 => constants(&[(0, 1, 0, q(1)), (1, 1, 0, q(1)), (1, 1, 1, q(1))]),
        N6(k) => constants(&[(0, 1, 0, q(1)), (1, 0, 0, CoeffExpr::constant(k.clone())), (1, 1, 1, q(1))]),
    }
}

/// Invariant bilinear forms as tabulated (the general family per row).
pub fn invariant_form(id: &CaseId, p: &Params) -> Vec<Vec<CoeffExpr>> {
    use CaseId::*;
    let z = CoeffExpr::zero();
    match id {
        T1 | N4 => vec![vec![p.eta11.clone(), p.eta12.clone()], vec![p.eta21.clone(), p.eta22.clone()]],
        T2 | N3 => vec![vec![p.eta11.clone(), p.eta12.clone()], vec![p.eta12.clone(), z]],
        T3 | N5 | N6(_) => vec![vec![z, p.eta12.clone()], vec![p.eta12.clone(), p.eta22.clone()]],
        N1 | N2 => vec![vec![p.eta11.clone(), z.clone()], vec![z, p.eta22.clone()]],
    }
}

fn entry(op: &mut MatDiffOp, i: usize, j: usize, d1: CoeffExpr, d0: JetPoly) {
    op.add_entry(i, j, 1, &c(d1));
    op.add_entry(i, j, 0, &d0);
}

/// Linear Poisson operators transcribed entry by entry from the classification list.
pub fn listed_operator(id: &CaseId) -> MatDiffOp {
    use CaseId::*;
    let mut op = MatDiffOp::zero(2);
    let z = JetPoly::zero;
    match id {
        T1 => {}
        T2 => entry(&mut op, 0, 0, u(1).scale(&Q::int(2)), ux(1)),
        T3 => {
            entry(&mut op, 0, 1, u(0).neg(), z());
            entry(&mut op, 1, 0, u(0).neg(), ux(0).neg());
        }
        N1 => {
            entry(&mut op, 0, 0, u(0).scale(&Q::int(2)), ux(0));
            entry(&mut op, 1, 1, u(1).scale(&Q::int(2)), ux(1));
        }
        N2 => entry(&mut op, 0, 0, u(0).scale(&Q::int(2)), ux(0)),
        N3 => {
            entry(&mut op, 0, 0, u(0).scale(&Q::int(2)), ux(0));
            entry(&mut op, 0, 1, u(1).scale(&Q::int(2)), ux(1));
            entry(&mut op, 1, 0, u(1).scale(&Q::int(2)), ux(1));
        }
        N4 => {
            entry(&mut op, 0, 1, u(0), ux(0));
            entry(&mut op, 1, 0, u(0), z());
            entry(&mut op, 1, 1, u(1).scale(&Q::int(2)), ux(1));
        }
        N5 => {
            entry(&mut op, 0, 1, u(0), ux(0));
            entry(&mut op, 1, 0, u(0), z());
            entry(&mut op, 1, 1, u(0).add(&u(1)).scale(&Q::int(2)), ux(1).add(&ux(0)));
        }
        N6(k) => {
            let kk = CoeffExpr::constant(k.clone());
            let k1 = kk.add(&q(1));
            entry(&mut op, 0, 1, k1.mul(&u(0)), ux(0));
            entry(&mut op, 1, 0, k1.mul(&u(0)), ux(0).scale(&kk));
            entry(&mut op, 1, 1, u(1).scale(&Q::int(2)), ux(1));
        }
    }
    op
}

/// Swap involution `u¹ ↔ u²` on coefficients.
pub fn swap_expr(e: &CoeffExpr) -> CoeffExpr {
    let map = |a: atoms::AtomId| match atoms::kind(a) {
        AtomKind::Var(0) => Some(u(1)),
        AtomKind::Var(1) => Some(u(0)),
        _ => None,
    };
    e.substitute(&map).expect("swap preserves admissibility")
}

pub fn swap_jet(p: &JetPoly) -> JetPoly {
    let sw = |v| {
        let comp = crate::jetspace::var_comp(v);
        match crate::jetspace::var_order(v) {
            Some(o) => jet_var(1 - comp, o),
            None => crate::jetspace::log_var(1 - comp),
        }
    };
    p.map_monomials(&sw).map_coeffs(&mut |x| swap_expr(x))
}

pub fn swap_op(op: &MatDiffOp) -> MatDiffOp {
    let mut out = MatDiffOp::zero(2);
    for i in 0..2 {
        for j in 0..2 {
            out.set_entry(1 - i, 1 - j, op.entry(i, j).iter().map(swap_jet).collect());
        }
    }
    out
}

pub fn swap_field(x: &EvoField) -> EvoField {
    EvoField::new(vec![swap_jet(&x.comps[1]), swap_jet(&x.comps[0])])
}

pub fn swap_matrix(m: &[Vec<CoeffExpr>]) -> Vec<Vec<CoeffExpr>> {
    (0..2).map(|i| (0..2).map(|j| swap_expr(&m[1 - i][1 - j])).collect()).collect()
}

pub fn swap_pencil(p: &GradedPencil) -> GradedPencil {
    GradedPencil { n: 2, layers: p.layers.iter().map(|(a, b)| (swap_op(a), swap_op(b))).collect(), truncation: p.truncation }
}

fn kappa_expr(k: &Q) -> CoeffExpr {
    CoeffExpr::constant(k.clone())
}

/// Base of the characteristic power in each frame: T3 none, N5
/// `2η¹²(u¹+u²) − η²²u¹`, N6 `2η¹²u² − (κ+1)η²²u¹`.
fn frame_base(id: &CaseId, p: &Params) -> Option<CoeffExpr> {
    match id {
        CaseId::N5 => Some(p.eta12.scale(&Q::int(2)).mul(&u(0).add(&u(1))).sub(&p.eta22.mul(&u(0)))),
        CaseId::N4 => Some(p.eta12.scale(&Q::int(2)).mul(&u(1)).sub(&p.eta22.mul(&u(0)))),
        CaseId::N6(k) => Some(p.eta12.scale(&Q::int(2)).mul(&u(1)).sub(&kappa_expr(k).add(&q(1)).mul(&p.eta22).mul(&u(0)))),
        _ => None,
    }
}

/// Catalog data with `ω₁ = η∂`, `ω₂` the linear operator of the algebra.
pub fn case_data(id: &CaseId, p: &Params) -> Result<CatalogCase, CatalogError> {
    if let CaseId::N6(k) = id {
        if *k == Q::int(-1) {
            return Err(CatalogError::Excluded(id.to_string(), "κ = −1 makes g₂ degenerate".into()));
        }
        if k.is_zero() {
            return case_data(&CaseId::N4, p);
        }
        if k.is_one() {
            return Err(CatalogError::Excluded(id.to_string(), "κ = 1 is catalogued as N3".into()));
        }
    }
    if *id == CaseId::N3 {
        let mut frame_params = p.clone();
        frame_params.eta22 = p.eta11.clone();
        let base = frame_case(&CaseId::N6(Q::one()), &frame_params)?;
        return Ok(swap_case(base, CaseId::N3));
    }
    if id.is_pair() {
        return frame_case(id, p);
    }
    let b = structure_constants(id);
    let eta = invariant_form(id, p);
    let g2 = bn_metric(&b);
    let mut field = Field::new(2);
    for n in ["eta11", "eta12", "eta21", "eta22"] {
        field.param(n);
    }
    let omega2 = bn_operator(&b);
    let omega1 = MatDiffOp::from_coeff_matrix(&eta, 1);
    let kind = if matches!(id, CaseId::N1) { PencilKind::Semisimple } else { PencilKind::Degenerate };
    Ok(CatalogCase { id: id.clone(), field, b, eta, g2, omega1, omega2, affinor: None, lambda_hat: None, kind, swapped: false, params: p.clone() })
}

fn frame_case(id: &CaseId, p: &Params) -> Result<CatalogCase, CatalogError> {
    if p.eta12.is_zero() {
        return Err(CatalogError::Constraint("η¹² ≠ 0 is required".into()));
    }
    let b = structure_constants(id);
    let mut field = Field::new(2);
    for n in ["eta12", "eta22"] {
        field.param(n);
    }
    field.declare_nonzero(&p.eta12)?;
    field.declare_nonzero(&u(0))?;
    let (a, bb) = (p.eta12.clone(), p.eta22.clone());
    let eta = vec![vec![CoeffExpr::zero(), a.clone()], vec![a.clone(), bb.clone()]];
    let g2 = bn_metric(&b);
    let a2 = a.mul(&a);
    let ainv = a.try_inverse_structural()?;
    let a2inv = a2.try_inverse_structural()?;
    let (lhat, l21) = match id {
        CaseId::T3 => {
            if !bb.is_zero() {
                field.declare_nonzero(&bb)?;
            }
            (u(0).neg().mul(&ainv), bb.mul(&u(0)).mul(&a2inv))
        }
        CaseId::N5 => (u(0).mul(&ainv), u(0).add(&u(1)).scale(&Q::int(2)).mul(&ainv).sub(&bb.mul(&u(0)).mul(&a2inv))),
        _ => {
            let k1 = kappa_expr(&id.kappa().unwrap()).add(&q(1));
            (k1.mul(&u(0)).mul(&ainv), u(1).scale(&Q::int(2)).mul(&ainv).sub(&k1.mul(&bb).mul(&u(0)).mul(&a2inv)))
        }
    };
    if let Some(base) = frame_base(id, p) {
        field.declare_nonzero(&base)?;
        // both signs of the N4 / N6(κ=−2) bases appear in the closed forms
        field.declare_nonzero(&base.neg())?;
    }
    if let CaseId::N6(k) = id {
        if *k == Q::int(-2) {
            let alt = a.scale(&Q::int(2)).mul(&u(1)).sub(&bb.mul(&u(0)));
            field.declare_nonzero(&alt)?;
        }
    }
    let affinor = vec![vec![lhat.clone(), CoeffExpr::zero()], vec![l21, lhat.clone()]];
    let omega2 = bn_operator(&b);
    let omega1 = MatDiffOp::from_coeff_matrix(&eta, 1);
    let kind = if matches!(id, CaseId::T3) && bb.is_zero() { PencilKind::Semisimple } else { PencilKind::NonSemisimple };
    Ok(CatalogCase { id: id.clone(), field, b, eta, g2, omega1, omega2, affinor: Some(affinor), lambda_hat: Some(lhat), kind, swapped: false, params: p.clone() })
}

fn swap_case(base: CatalogCase, id: CaseId) -> CatalogCase {
    let mut field = base.field.clone();
    let _ = field.param("eta11");
    if let Some(b) = frame_base(&CaseId::N6(Q::one()), &{
        let mut p = base.params.clone();
        p.eta22 = base.params.eta22.clone();
        p
    }) {
        let sw = swap_expr(&b);
        let _ = field.declare_nonzero(&sw);
    }
    let _ = field.declare_nonzero(&u(1));
    let b = structure_constants(&id);
    CatalogCase {
        id,
        field,
        b,
        eta: swap_matrix(&base.eta),
        g2: swap_matrix(&base.g2),
        omega1: swap_op(&base.omega1),
        omega2: swap_op(&base.omega2),
        affinor: base.affinor.as_ref().map(|l| swap_matrix(l)),
        lambda_hat: base.lambda_hat.as_ref().map(swap_expr),
        kind: base.kind,
        swapped: true,
        params: base.params,
    }
}

impl CatalogCase {
    /// Frame case used for the closed-form families (N3 uses N6(κ=1)).
    fn frame(&self) -> Result<CatalogCase, CatalogError> {
        if self.swapped {
            let mut p = self.params.clone();
            p.eta22 = self.params.eta11.clone();
            frame_case(&CaseId::N6(Q::one()), &p)
        } else {
            Ok(self.clone())
        }
    }

    fn frame_id(&self) -> CaseId {
        if self.swapped {
            CaseId::N6(Q::one())
        } else {
            self.id.clone()
        }
    }

    /// `L = g₂η⁻¹` recomputed.
    pub fn affinor_computed(&self) -> Result<Vec<Vec<CoeffExpr>>, CatalogError> {
        let ei = inverse(&self.eta, &self.field)?;
        Ok(mat_mul(&self.g2, &ei))
    }

    pub fn pencil(&self, truncation: usize) -> GradedPencil {
        GradedPencil::new(self.omega2.clone(), self.omega1.clone(), truncation)
    }

    /// `ω₂ − λω₁ + ε² Lie_X ω₂`.
    pub fn deformed_pencil(&self, x: &EvoField, truncation: usize) -> GradedPencil {
        let mut p = self.pencil(truncation);
        let l = lie_along_field(x, &self.omega2);
        p.add_layer(2, &l, &MatDiffOp::zero(2));
        p
    }

    /// Sum of two Hamiltonian fields `ω₁δh + s·ω₂δk`.
    pub fn hamiltonian_pair(&self, h: &JetPoly, k: &JetPoly, sign: i64) -> EvoField {
        let a = hamiltonian_vector_field(&self.omega1, h);
        let b = hamiltonian_vector_field(&self.omega2, k);
        if sign < 0 {
            a.sub(&b)
        } else {
            a.add(&b)
        }
    }

    fn sqrt_pow(&self, base: &CoeffExpr, p: i32) -> Result<CoeffExpr, CatalogError> {
        Ok(self.field.power_frac(base, p, 2)?)
    }

    fn eta12_inv(&self) -> CoeffExpr {
        self.params.eta12.try_inverse_structural().expect("η¹² invertible")
    }
}

/// `X^i = X^i₁u¹_xx + X^i₂(u¹_x)² + X^i₃u¹_xu²_x + X^i₄(u²_x)² + X^i₅u²_xx`.
pub fn quadratic_field(x: [[CoeffExpr; 5]; 2]) -> EvoField {
    let comp = |r: &[CoeffExpr; 5]| {
        c(r[0].clone())
            .mul(&uxx(0))
            .add(&c(r[1].clone()).mul(&ux(0).pow(2)))
            .add(&c(r[2].clone()).mul(&ux(0).mul(&ux(1))))
            .add(&c(r[3].clone()).mul(&ux(1).pow(2)))
            .add(&c(r[4].clone()).mul(&uxx(1)))
    };
    EvoField::new(vec![comp(&x[0]), comp(&x[1])])
}

/// Coefficient functions `[X^i₁..X^i₅]` of a degree-2 field.
pub fn quadratic_coeffs(x: &EvoField) -> [[CoeffExpr; 5]; 2] {
    let pick = |p: &JetPoly| -> [CoeffExpr; 5] {
        [
            p.coeff_of(&[(jet_var(0, 2), 1)]),
            p.coeff_of(&[(jet_var(0, 1), 2)]),
            p.coeff_of(&[(jet_var(0, 1), 1), (jet_var(1, 1), 1)]),
            p.coeff_of(&[(jet_var(1, 1), 2)]),
            p.coeff_of(&[(jet_var(1, 2), 1)]),
        ]
    };
    [pick(&x.comps[0]), pick(&x.comps[1])]
}

fn need(fs: &[CoeffExpr], n: usize) -> Vec<CoeffExpr> {
    let mut v: Vec<CoeffExpr> = fs.to_vec();
    v.resize(n.max(v.len()), CoeffExpr::zero());
    v
}

fn d1(e: &CoeffExpr) -> CoeffExpr {
    e.partial(0)
}

fn d2(e: &CoeffExpr) -> CoeffExpr {
    e.partial(1)
}

/// `(h₁₁, h₂₁)` of the logarithmic quasi-Hamiltonian in the frame.
fn frame_h(cc: &CatalogCase, f1: &CoeffExpr, f2: &CoeffExpr) -> Result<(CoeffExpr, CoeffExpr), CatalogError> {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let ai = cc.eta12_inv();
    let f2p = d1(f2);
    match cc.frame_id() {
        CaseId::T3 => {
            if b.is_zero() {
                return Err(CatalogError::Excluded("T3".into(), "η²² = 0 has no logarithmic quasi-Hamiltonian".into()));
            }
            let e = t3_exponential(cc);
            let u1i = u(0).try_inverse_structural()?;
            let inner = b.mul(&u(0)).mul(&f2p).add(&a.mul(&u(1)).add(&b.mul(&u(0))).mul(&u1i).mul(f2));
            let h11 = e.mul(&inner).mul(&ai).scale(&Q::new(1, 3)).sub(f1);
            let h21 = e.mul(f2).scale(&Q::new(-1, 3));
            Ok((h11, h21))
        }
        CaseId::N5 => {
            let s2 = frame_base(&CaseId::N5, &cc.params).unwrap();
            let s = cc.sqrt_pow(&s2, 1)?;
            let si = cc.sqrt_pow(&s2, -1)?;
            let h11 = s
                .mul(&f2p)
                .mul(&ai)
                .scale(&Q::new(1, 3))
                .add(&a.scale(&Q::int(2)).sub(&b).mul(f2).mul(&ai).mul(&si).scale(&Q::new(1, 6)))
                .add(&f1.mul(&ai).scale(&Q::new(1, 2)));
            let h21 = f2.mul(&si).scale(&Q::new(1, 3));
            Ok((h11, h21))
        }
        CaseId::N6(k) => {
            if k.is_zero() || k == Q::int(-2) || k == Q::int(-1) {
                return Err(CatalogError::Excluded(cc.id.to_string(), "four-function family".into()));
            }
            let t = frame_base(&CaseId::N6(k.clone()), &cc.params).unwrap();
            let kk = kappa_expr(&k);
            let k1 = kk.add(&q(1));
            // T^{(κ±1)/2} with κ = n/d
            let pw = |shift: i64| -> Result<CoeffExpr, CatalogError> {
                let e = k.clone() + Q::int(shift);
                let (n, d) = e.as_small().ok_or_else(|| CatalogError::Constraint("κ too large".into()))?;
                Ok(cc.field.power_frac(&t, n as i32, (2 * d) as u32)?)
            };
            let tp = pw(1)?;
            let tm = pw(-1)?;
            let k1i = k1.try_inverse_structural()?;
            let kk2i = kk.mul(&kk.add(&q(2))).try_inverse_structural()?;
            let h11 = tp
                .mul(&f2p)
                .mul(&k1i)
                .mul(&k1i)
                .mul(&ai)
                .scale(&Q::new(1, 3))
                .sub(&b.mul(&tm).mul(f2).mul(&ai).scale(&Q::new(1, 6)))
                .add(&f1.mul(&ai).mul(&kk2i));
            let h21 = tm.mul(f2).mul(&k1i).scale(&Q::new(1, 3));
            Ok((h11, h21))
        }
        other => Err(CatalogError::Excluded(other.to_string(), "no logarithmic quasi-Hamiltonian".into())),
    }
}

/// `e^{−η¹²u²/(η²²u¹)}`.
pub fn t3_exponential(cc: &CatalogCase) -> CoeffExpr {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let arg = a.mul(&u(1)).neg().mul(&b.mul(&u(0)).try_inverse_structural().expect("η²²u¹ invertible"));
    CoeffExpr::exp(&arg)
}

/// Quasi-Hamiltonian densities `H = Σ h_ij u^i_x log u^j_x`, `K` with
/// `𝒦 = Lᵀℋ`.
#[derive(Clone, Debug)]
pub struct QuasiHamiltonians {
    pub h: [[CoeffExpr; 2]; 2],
    pub k: [[CoeffExpr; 2]; 2],
    pub h_density: JetPoly,
    pub k_density: JetPoly,
}

fn log_density(m: &[[CoeffExpr; 2]; 2]) -> JetPoly {
    let mut d = JetPoly::zero();
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                d.add_assign(&c(v.clone()).mul(&ux(i)).mul(&JetPoly::log_ux(j)));
            }
        }
    }
    d
}

pub fn quasi_hamiltonians(cc: &CatalogCase, f1: &CoeffExpr, f2: &CoeffExpr) -> Result<QuasiHamiltonians, CatalogError> {
    let frame = cc.frame()?;
    let (h11, h21) = frame_h(&frame, f1, f2)?;
    let l = frame.affinor.clone().unwrap();
    let z = CoeffExpr::zero();
    let h = [[h11.clone(), z.clone()], [h21.clone(), z.clone()]];
    // 𝒦 = Lᵀℋ: k_ij = Σ_l L_li h_lj
    let mut k = [[z.clone(), z.clone()], [z.clone(), z.clone()]];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = CoeffExpr::zero();
            for (ll, hrow) in h.iter().enumerate() {
                s = s.add(&l[ll][i].mul(&hrow[j]));
            }
            k[i][j] = s;
        }
    }
    let mut out = QuasiHamiltonians { h_density: log_density(&h), k_density: log_density(&k), h, k };
    if cc.swapped {
        let sw = |m: &[[CoeffExpr; 2]; 2]| [[swap_expr(&m[1][1]), swap_expr(&m[1][0])], [swap_expr(&m[0][1]), swap_expr(&m[0][0])]];
        out.h = sw(&out.h);
        out.k = sw(&out.k);
        out.h_density = swap_jet(&out.h_density);
        out.k_density = swap_jet(&out.k_density);
    }
    Ok(out)
}

/// `X = ω₁δH − ω₂δK`.
pub fn quasi_field(cc: &CatalogCase, f1: &CoeffExpr, f2: &CoeffExpr) -> Result<EvoField, CatalogError> {
    let qh = quasi_hamiltonians(cc, f1, f2)?;
    let a = hamiltonian_vector_field(&cc.omega2, &qh.h_density);
    Ok(a.sub(&hamiltonian_vector_field(&cc.omega1, &qh.k_density)))
}

/// Second-order deformation field in reduced form. Two-function cases go
/// through the quasi-Hamiltonians; N4 and N6(κ=−2) use the explicit
/// four-function blocks.
pub fn deformation_field(cc: &CatalogCase, fs: &[CoeffExpr]) -> Result<EvoField, CatalogError> {
    let frame = cc.frame()?;
    let fid = frame.id.clone();
    let x = match fid {
        CaseId::T3 if frame.params.eta22.is_zero() => {
            let f = need(fs, 1)[0].clone();
            EvoField::new(vec![JetPoly::zero(), c(f).mul(&ux(0)).total_x()])
        }
        CaseId::N4 => n4_field(&frame, &need(fs, 4))?,
        CaseId::N6(ref k) if *k == Q::int(-2) => n6m2_field(&frame, &need(fs, 4))?,
        _ => {
            let f = need(fs, 2);
            quasi_field(&frame, &f[0], &f[1])?
        }
    };
    Ok(if cc.swapped { swap_field(&x) } else { x })
}

fn n4_field(cc: &CatalogCase, f: &[CoeffExpr]) -> Result<EvoField, CatalogError> {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let base = b.mul(&u(0)).sub(&a.scale(&Q::int(2)).mul(&u(1)));
    let th = base.try_inverse_structural()?;
    let th_half = cc.sqrt_pow(&base, -1)?;
    let ai = cc.eta12_inv();
    let z = CoeffExpr::zero();
    let tf2 = th.mul(&f[1]);
    let w = th_half.mul(&f[3]).sub(&d1(&f[1]).mul(&ai));
    Ok(quadratic_field([
        [z.clone(), th.mul(&f[0]), d1(&tf2), d2(&tf2), tf2.clone()],
        [z, th.mul(&f[2]), d1(&w), d2(&w), w],
    ]))
}

fn n6m2_field(cc: &CatalogCase, f: &[CoeffExpr]) -> Result<EvoField, CatalogError> {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let base = a.scale(&Q::int(2)).mul(&u(1)).add(&b.mul(&u(0)));
    let th = base.try_inverse_structural()?;
    let th32 = cc.sqrt_pow(&base, -3)?;
    let th52 = cc.sqrt_pow(&base, -5)?;
    let ai = cc.eta12_inv();
    let z = CoeffExpr::zero();
    let t2f2 = th.pow(2).mul(&f[1]);
    let t3f2 = th.pow(3).mul(&f[1]);
    let t32f4 = th32.mul(&f[3]);
    let x12 = b.scale(&Q::int(2)).mul(&th).mul(&t32f4.sub(&d1(&t2f2).mul(&ai))).add(&th.mul(&f[0]));
    let x13 = a.scale(&Q::int(2)).mul(&th52).mul(&f[3]).sub(&d1(&t3f2));
    let x14 = a.scale(&Q::int(-4)).mul(&th.pow(4)).mul(&f[1]);
    let x15 = t3f2.clone();
    let x23 = d1(&t32f4).sub(&d1(&d1(&t2f2)).mul(&ai));
    let x24 = d1(&t3f2).scale(&Q::int(4)).add(&d2(&t32f4));
    let x25 = t32f4.sub(&d1(&t2f2).mul(&ai));
    Ok(quadratic_field([[z.clone(), x12, x13, x14, x15], [z, f[2].clone(), x23, x24, x25]]))
}

/// Invariants predicted in closed form.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    pub lambda1_sq: Option<CoeffExpr>,
    pub lambda2: CoeffExpr,
}

pub fn closed_form_invariants(cc: &CatalogCase, fs: &[CoeffExpr]) -> Result<ClosedForm, CatalogError> {
    let frame = cc.frame()?;
    let (a, b) = (frame.params.eta12.clone(), frame.params.eta22.clone());
    let ai = frame.eta12_inv();
    let f = need(fs, 4);
    let f2 = f[1].clone();
    let out = match frame.id.clone() {
        CaseId::T3 => {
            if b.is_zero() {
                return Err(CatalogError::Excluded("T3".into(), "η²² = 0".into()));
            }
            ClosedForm { lambda1_sq: None, lambda2: u(0).mul(&ai).mul(&t3_exponential(&frame)).mul(&f2) }
        }
        CaseId::N5 => {
            let s2 = frame_base(&CaseId::N5, &frame.params).unwrap();
            ClosedForm { lambda1_sq: None, lambda2: u(0).mul(&f2).mul(&ai).mul(&frame.sqrt_pow(&s2, -1)?).neg() }
        }
        CaseId::N4 => {
            let ai3 = ai.pow(3);
            let root = frame.sqrt_pow(&b.mul(&u(0)).sub(&a.scale(&Q::int(2)).mul(&u(1))), -1)?;
            ClosedForm {
                lambda1_sq: Some(u(0).mul(&f2).mul(&ai3).scale(&Q::int(2))),
                lambda2: d1(&u(0).mul(&f2)).mul(&ai.pow(2)).sub(&u(0).mul(&f[3]).mul(&ai).mul(&root)),
            }
        }
        CaseId::N6(k) if k == Q::int(-2) => {
            let base = a.scale(&Q::int(2)).mul(&u(1)).add(&b.mul(&u(0)));
            let bi = base.try_inverse_structural()?;
            ClosedForm {
                lambda1_sq: Some(u(0).mul(&f2).mul(&ai.pow(3)).mul(&bi.pow(2)).scale(&Q::int(2))),
                lambda2: u(0)
                    .mul(&f[3])
                    .mul(&ai)
                    .mul(&frame.sqrt_pow(&base, -3)?)
                    .sub(&d1(&u(0).mul(&bi.pow(2)).mul(&f2)).mul(&ai.pow(2))),
            }
        }
        CaseId::N6(k) => {
            let t = frame_base(&CaseId::N6(k.clone()), &frame.params).unwrap();
            let e = k.clone() + Q::int(-1);
            let (n, d) = e.as_small().ok_or_else(|| CatalogError::Constraint("κ too large".into()))?;
            let tm = frame.field.power_frac(&t, n as i32, (2 * d) as u32)?;
            let k1 = kappa_expr(&k).add(&q(1));
            ClosedForm { lambda1_sq: None, lambda2: k1.mul(&u(0)).mul(&tm).mul(&f2).mul(&ai).neg() }
        }
        other => return Err(CatalogError::Excluded(other.to_string(), "no closed-form invariants".into())),
    };
    Ok(if cc.swapped {
        ClosedForm { lambda1_sq: out.lambda1_sq.as_ref().map(swap_expr), lambda2: swap_expr(&out.lambda2) }
    } else {
        out
    })
}

/// `Θ_(3)` of the N4 standard form.
pub fn n4_theta3(cc: &CatalogCase, fs: &[CoeffExpr]) -> Result<Vec<Vec<CoeffExpr>>, CatalogError> {
    if cc.id != CaseId::N4 {
        return Err(CatalogError::Excluded(cc.id.to_string(), "Θ_(3) is tabulated for N4".into()));
    }
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let f = need(fs, 4);
    let ai = cc.eta12_inv();
    let d = a.scale(&Q::int(2)).mul(&u(1)).sub(&b.mul(&u(0)));
    let di = d.try_inverse_structural()?;
    let r = cc.sqrt_pow(&d.neg(), -1)?;
    let t11 = u(0).mul(&f[1]).mul(&di).scale(&Q::int(2));
    let t12 = u(0).mul(&d1(&f[1])).mul(&ai).sub(&u(0).mul(&f[3]).mul(&r)).add(&u(1).mul(&f[1]).mul(&di).scale(&Q::int(2)));
    let t22 = u(1).mul(&d1(&f[1])).mul(&ai).scale(&Q::int(4)).sub(&u(1).mul(&f[3]).mul(&r).scale(&Q::int(4)));
    Ok(vec![vec![t11, t12.clone()], vec![t12, t22]])
}

/// Which truncated family a case carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncatedKind {
    One,
    Two,
    Three,
}

pub fn truncated_kind(id: &CaseId) -> Option<TruncatedKind> {
    match id {
        CaseId::T3 | CaseId::N3 | CaseId::N5 => Some(TruncatedKind::One),
        CaseId::N4 => Some(TruncatedKind::Three),
        CaseId::N6(k) if *k == Q::int(-2) => Some(TruncatedKind::Two),
        CaseId::N6(k) if k.is_zero() => Some(TruncatedKind::Three),
        CaseId::N6(k) if *k == Q::int(-1) => None,
        CaseId::N6(_) => Some(TruncatedKind::One),
        _ => None,
    }
}

/// Truncated dispersive layer `Θ` in the case's own coordinates, with
/// `f = f(u¹)`, `h = h(u¹)` written in the frame variable.
pub fn truncated_structure(cc: &CatalogCase, f: &CoeffExpr, h: &CoeffExpr) -> Result<MatDiffOp, CatalogError> {
    let frame = cc.frame()?;
    let kind = truncated_kind(&cc.id).ok_or_else(|| CatalogError::Excluded(cc.id.to_string(), "no truncated family".into()))?;
    let fj = c(f.clone());
    let fx = fj.total_x();
    let fxx = fx.total_x();
    let mut th = MatDiffOp::zero(2);
    let theta = match kind {
        TruncatedKind::One | TruncatedKind::Two => {
            th.add_entry(1, 1, 3, &fj.scale_q(&Q::int(2)));
            th.add_entry(1, 1, 2, &fx.scale_q(&Q::int(3)));
            th.add_entry(1, 1, 1, &fxx);
            if kind == TruncatedKind::Two {
                let hj = c(h.clone());
                let g = hj.mul(&ux(0)).total_x().add(&hj.mul(&uxx(0)));
                th.add_entry(1, 1, 1, &g.scale_q(&Q::int(2)));
                th.add_entry(1, 1, 0, &g.total_x());
            }
            th
        }
        TruncatedKind::Three => truncated3(&frame, f, h)?,
    };
    Ok(if cc.swapped { swap_op(&theta) } else { theta })
}

fn truncated3(cc: &CatalogCase, f: &CoeffExpr, h: &CoeffExpr) -> Result<MatDiffOp, CatalogError> {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let ai = cc.eta12_inv();
    let base = a.scale(&Q::int(2)).mul(&u(1)).sub(&b.mul(&u(0)));
    let t = base.try_inverse_structural()?;
    let (f1, f2) = (d1(f), d1(&d1(f)));
    let (h1, h2) = (d1(h), d1(&d1(h)));
    let ta = t.mul(&a);
    let x1 = ux(0);
    let x2 = ux(1);
    let xx1 = uxx(0);
    let xx2 = uxx(1);
    let x3 = JetPoly::jet(0, 3);
    let k = |e: CoeffExpr| c(e);
    let mut th = MatDiffOp::zero(2);
    th.add_entry(1, 1, 3, &k(f.scale(&Q::int(2))));
    let q12_2 = k(ta.mul(f).scale(&Q::int(4))).mul(&x1);
    th.add_entry(0, 1, 2, &q12_2);
    th.add_entry(1, 0, 2, &q12_2.neg());
    th.add_entry(1, 1, 2, &k(f1.scale(&Q::int(3))).mul(&x1));
    th.add_entry(0, 0, 1, &k(ta.pow(2).mul(f).scale(&Q::int(-8))).mul(&x1.pow(2)));
    let q12_1 = ta.mul(&f1).scale(&Q::int(2)).sub(&t.pow(2).mul(&a).mul(&b).mul(f).scale(&Q::int(2))).add(&t.pow(2).mul(h).scale(&Q::int(2)));
    th.add_entry(0, 1, 1, &k(q12_1).mul(&x1.pow(2)));
    let q21_1 = k(ta.mul(&f1).scale(&Q::int(-6)).sub(&t.pow(2).mul(&a).mul(&b).mul(f).scale(&Q::int(10))).add(&t.pow(2).mul(h).scale(&Q::int(2))))
        .mul(&x1.pow(2))
        .add(&k(ta.pow(2).mul(f).scale(&Q::int(16))).mul(&x1).mul(&x2))
        .add(&k(ta.mul(f).scale(&Q::int(-8))).mul(&xx1));
    th.add_entry(1, 0, 1, &q21_1);
    let q22_1 = k(f2.add(&t.mul(&ai).mul(&h1).scale(&Q::int(2))).add(&t.pow(2).mul(&ai).mul(&b).mul(h).scale(&Q::int(6))))
        .mul(&x1.pow(2))
        .add(&k(t.pow(2).mul(h).scale(&Q::int(-8))).mul(&x1).mul(&x2))
        .add(&k(f1.add(&t.mul(&ai).mul(h).scale(&Q::int(4)))).mul(&xx1));
    th.add_entry(1, 1, 1, &q22_1);
    let q11_0 = k(ta.pow(2).mul(&f1).scale(&Q::int(4)).add(&t.pow(3).mul(&a.pow(2)).mul(&b).mul(f).scale(&Q::int(8))).neg())
        .mul(&x1.pow(3))
        .add(&k(ta.pow(3).mul(f).scale(&Q::int(16))).mul(&x1.pow(2)).mul(&x2))
        .add(&k(ta.pow(2).mul(f).scale(&Q::int(-8))).mul(&x1).mul(&xx1));
    th.add_entry(0, 0, 0, &q11_0);
    let q12_0 = k(t.pow(2).mul(&h1).scale(&Q::int(2)).add(&t.pow(3).mul(&b).mul(h).scale(&Q::int(4))))
        .mul(&x1.pow(3))
        .add(&k(t.pow(3).mul(&a).mul(h).scale(&Q::int(-8))).mul(&x1.pow(2)).mul(&x2))
        .add(&k(t.pow(2).mul(h).scale(&Q::int(4))).mul(&x1).mul(&xx1));
    th.add_entry(0, 1, 0, &q12_0);
    let q21_0 = k(ta.mul(&f2).scale(&Q::int(-2)).sub(&t.pow(2).mul(&a).mul(&b).mul(&f1).scale(&Q::int(8))).sub(&t.pow(3).mul(&a).mul(&b.pow(2)).mul(f).scale(&Q::int(12))))
        .mul(&x1.pow(3))
        .add(&k(ta.pow(2).mul(&f1).scale(&Q::int(12)).add(&t.pow(3).mul(&a.pow(2)).mul(&b).mul(f).scale(&Q::int(40)))).mul(&x1.pow(2)).mul(&x2))
        .add(&k(ta.mul(&f1).scale(&Q::int(-8)).sub(&t.pow(2).mul(&a).mul(&b).mul(f).scale(&Q::int(16)))).mul(&x1).mul(&xx1))
        .add(&k(ta.pow(3).mul(f).scale(&Q::int(-32))).mul(&x1).mul(&x2.pow(2)))
        .add(&k(ta.pow(2).mul(f).scale(&Q::int(8))).mul(&x1).mul(&xx2))
        .add(&k(ta.pow(2).mul(f).scale(&Q::int(16))).mul(&xx1).mul(&x2))
        .add(&k(ta.mul(f).scale(&Q::int(-4))).mul(&x3));
    th.add_entry(1, 0, 0, &q21_0);
    let q22_0 = k(t.mul(&ai).mul(&h2).add(&t.pow(2).mul(&ai).mul(&b).mul(&h1).scale(&Q::int(4))).add(&t.pow(3).mul(&ai).mul(&b.pow(2)).mul(h).scale(&Q::int(6))))
        .mul(&x1.pow(3))
        .add(&k(t.pow(2).mul(&h1).scale(&Q::int(-6)).sub(&t.pow(3).mul(&b).mul(h).scale(&Q::int(20)))).mul(&x1.pow(2)).mul(&x2))
        .add(&k(t.mul(&ai).mul(&h1).scale(&Q::int(4)).add(&t.pow(2).mul(&ai).mul(&b).mul(h).scale(&Q::int(8)))).mul(&x1).mul(&xx1))
        .add(&k(t.pow(3).mul(&a).mul(h).scale(&Q::int(16))).mul(&x1).mul(&x2.pow(2)))
        .add(&k(t.pow(2).mul(h).scale(&Q::int(-4))).mul(&x1).mul(&xx2))
        .add(&k(t.pow(2).mul(h).scale(&Q::int(-8))).mul(&xx1).mul(&x2))
        .add(&k(t.mul(&ai).mul(h).scale(&Q::int(2))).mul(&x3));
    th.add_entry(1, 1, 0, &q22_0);
    Ok(th)
}

/// Data of a truncation proof: the thm_quasi field `x` with rescaled
/// functions, the generator `y` of the reducing flow and the tabulated
/// reduced field `x_tilde` when one is displayed.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub x: EvoField,
    pub y: EvoField,
    pub x_tilde: Option<EvoField>,
}

/// `Y` built from `R`: `Y¹ = −η¹²(R u¹_x)_x`, `Y² = −η²²(R u¹_x)_x + η¹²(R u²_x)_x`.
pub fn reduction_generator(cc: &CatalogCase, r: &CoeffExpr) -> EvoField {
    let (a, b) = (cc.params.eta12.clone(), cc.params.eta22.clone());
    let r1 = c(r.clone()).mul(&ux(0)).total_x();
    let r2 = c(r.clone()).mul(&ux(1)).total_x();
    EvoField::new(vec![r1.scale(&a.neg()), r1.scale(&b.neg()).add(&r2.scale(&a))])
}

pub fn truncation_reduction(cc: &CatalogCase, f: &CoeffExpr, h: &CoeffExpr) -> Result<Reduction, CatalogError> {
    let frame = cc.frame()?;
    let (a, b) = (frame.params.eta12.clone(), frame.params.eta22.clone());
    let ai = frame.eta12_inv();
    let u1i = u(0).try_inverse_structural()?;
    let z = CoeffExpr::zero();
    let kind = truncated_kind(&cc.id).ok_or_else(|| CatalogError::Excluded(cc.id.to_string(), "no truncated family".into()))?;
    let red = match kind {
        TruncatedKind::One => {
            let f1 = match frame.id.clone() {
                CaseId::T3 => f.mul(&u1i),
                CaseId::N5 => a.mul(f).mul(&u1i).neg(),
                CaseId::N6(k) => {
                    let kk = kappa_expr(&k);
                    a.mul(&kk).mul(f).mul(&kk.add(&q(1)).mul(&u(0)).try_inverse_structural()?).neg()
                }
                other => return Err(CatalogError::Excluded(other.to_string(), "".into())),
            };
            let x = quasi_field(&frame, &f1, &z)?;
            Reduction { x, y: EvoField::zero(2), x_tilde: None }
        }
        TruncatedKind::Two => {
            let f1 = a.mul(f).mul(&u1i).scale(&Q::int(-2));
            let f3 = h.mul(&u1i).neg();
            let base = a.scale(&Q::int(2)).mul(&u(1)).add(&b.mul(&u(0)));
            let th = base.try_inverse_structural()?;
            let x = EvoField::new(vec![c(th.mul(&f1)).mul(&ux(0).pow(2)), c(f3.clone()).mul(&ux(0).pow(2))]);
            let r = u(0).mul(&f1).mul(&ai).mul(&th).scale(&Q::new(1, 2));
            let y = reduction_generator(&frame, &r);
            let f1p = d1(&f1);
            let t2 = th.pow(2);
            let xt = quadratic_field([
                [
                    th.mul(&u(0)).mul(&f1).scale(&Q::new(-1, 2)),
                    th.mul(&u(0)).mul(&f1p).scale(&Q::new(-1, 2)).add(&t2.mul(&a.mul(&u(1)).add(&b.mul(&u(0)))).mul(&f1)),
                    t2.mul(&a).mul(&u(0)).mul(&f1),
                    z.clone(),
                    z.clone(),
                ],
                [
                    th.mul(&b).mul(&u(0)).mul(&f1).mul(&ai).scale(&Q::new(-1, 2)),
                    th.mul(&b).mul(&u(0)).mul(&f1p).mul(&ai).scale(&Q::new(1, 2)).add(&t2.mul(&b).mul(&u(1)).mul(&f1)).sub(&f3).neg(),
                    th.mul(&u(0)).mul(&f1p).scale(&Q::new(1, 2)).add(&t2.mul(&a.mul(&u(1)).add(&b.mul(&u(0)))).mul(&f1)),
                    t2.mul(&a).mul(&u(0)).mul(&f1).neg(),
                    th.mul(&u(0)).mul(&f1).scale(&Q::new(1, 2)),
                ],
            ]);
            Reduction { x, y, x_tilde: Some(xt) }
        }
        TruncatedKind::Three => {
            let f1 = a.mul(f).mul(&u1i).scale(&Q::int(2));
            let f3 = h.mul(&u1i).mul(&ai).neg();
            let base = a.scale(&Q::int(2)).mul(&u(1)).sub(&b.mul(&u(0)));
            let th = base.try_inverse_structural()?;
            let x = EvoField::new(vec![c(th.mul(&f1).neg()).mul(&ux(0).pow(2)), c(th.mul(&f3).neg()).mul(&ux(0).pow(2))]);
            let r = u(0).mul(&f1).mul(&ai).mul(&th).scale(&Q::new(-1, 2));
            let y = reduction_generator(&frame, &r);
            let f1p = d1(&f1);
            let t2 = th.pow(2);
            let xt = quadratic_field([
                [
                    th.mul(&u(0)).mul(&f1).scale(&Q::new(1, 2)),
                    th.mul(&u(0)).mul(&f1p).scale(&Q::new(1, 2)).sub(&t2.mul(&a.mul(&u(1)).sub(&b.mul(&u(0)))).mul(&f1)),
                    t2.mul(&a).mul(&u(0)).mul(&f1).neg(),
                    z.clone(),
                    z.clone(),
                ],
                [
                    th.mul(&b).mul(&u(0)).mul(&f1).mul(&ai).scale(&Q::new(1, 2)),
                    th.mul(&b).mul(&u(0)).mul(&f1p).mul(&ai).scale(&Q::new(1, 2)).add(&t2.mul(&b).mul(&u(1)).mul(&f1)).sub(&th.mul(&f3)),
                    th.mul(&u(0)).mul(&f1p).scale(&Q::new(1, 2)).add(&t2.mul(&a.mul(&u(1)).add(&b.mul(&u(0)))).mul(&f1)).neg(),
                    t2.mul(&a).mul(&u(0)).mul(&f1),
                    th.mul(&u(0)).mul(&f1).scale(&Q::new(-1, 2)),
                ],
            ]);
            Reduction { x, y, x_tilde: Some(xt) }
        }
    };
    Ok(if cc.swapped {
        Reduction { x: swap_field(&red.x), y: swap_field(&red.y), x_tilde: red.x_tilde.as_ref().map(swap_field) }
    } else {
        red
    })
}

/// Instantiation of a first-order family: the degree-0 densities `h`, `k`
/// fixing the two-variable functions, plus the residual one-variable
/// function (`F` for T3, `G` for N5, `S` for N3/N4/N6) in the frame variable.
#[derive(Clone, Debug)]
pub struct FirstOrderSeed {
    pub h: CoeffExpr,
    pub k: CoeffExpr,
    pub residual: CoeffExpr,
}

#[derive(Clone, Debug)]
pub struct FirstOrderFamily {
    pub x: EvoField,
    /// The family's defining relations evaluated on `x`, by name.
    pub relations: Vec<(String, bool)>,
    /// Part of `x` carried by the residual function.
    pub residual_field: EvoField,
    /// Degree-0 densities with `x = ω₁δH + ω₂δK`.
    pub trivializer: (CoeffExpr, CoeffExpr),
    /// Field extended by `log θ` when the trivializer needs it.
    pub field: Field,
}

fn integral(e: &CoeffExpr, i: usize, what: &str) -> Result<CoeffExpr, CatalogError> {
    e.integrate(i).ok_or_else(|| CatalogError::NotIntegrable(format!("∫ {} du{} for {}", e, i + 1, what)))
}

/// `[[X¹₁, X¹₂], [X²₁, X²₂]]` of a degree-1 field.
pub fn linear_coeffs(x: &EvoField) -> [[CoeffExpr; 2]; 2] {
    let pick = |p: &JetPoly| [p.coeff_of(&[(jet_var(0, 1), 1)]), p.coeff_of(&[(jet_var(1, 1), 1)])];
    [pick(&x.comps[0]), pick(&x.comps[1])]
}

fn degree0_pair(cc: &CatalogCase, h: &CoeffExpr, k: &CoeffExpr) -> EvoField {
    hamiltonian_vector_field(&cc.omega1, &c(h.clone())).add(&hamiltonian_vector_field(&cc.omega2, &c(k.clone())))
}

/// First-order deformation family `X = ω₁δH₀ + ω₂δK₀ + X_res` with the
/// relations that characterize solutions of `d_{ω₁}d_{ω₂}X = 0`, and the
/// degree-0 trivializer removing the residual function.
pub fn firstorder_family(cc: &CatalogCase, seed: &FirstOrderSeed) -> Result<FirstOrderFamily, CatalogError> {
    let mut fr = cc.frame()?;
    let (a, b) = (fr.params.eta12.clone(), fr.params.eta22.clone());
    let ai = fr.eta12_inv();
    let s = seed.residual.clone();
    if !s.partial(1).is_zero() {
        return Err(CatalogError::Constraint("residual function must depend on u1 only".into()));
    }
    let u1i = u(0).try_inverse_structural()?;
    let fid = fr.frame_id();
    let (res, hr, kr) = match &fid {
        CaseId::T3 => {
            let k = integral(&integral(&s, 0, "F")?.mul(&u1i), 0, "F")?.neg();
            (EvoField::new(vec![JetPoly::zero(), c(s.clone()).mul(&ux(0))]), CoeffExpr::zero(), k)
        }
        CaseId::N5 => {
            let k = integral(&integral(&s.mul(&u1i), 0, "G")?, 0, "G")?;
            (EvoField::new(vec![JetPoly::zero(), c(s.clone()).mul(&ux(0))]), CoeffExpr::zero(), k)
        }
        CaseId::N4 | CaseId::N6(_) => {
            let kq = fid.kappa().unwrap_or_else(Q::zero);
            let th = frame_base(&fid, &fr.params).unwrap();
            let kk = kappa_expr(&kq);
            let (n, d) = kq.as_small().ok_or_else(|| CatalogError::Constraint("κ too large".into()))?;
            let half = fr.field.power_frac(&th, n as i32, (2 * d) as u32)?;
            let res = EvoField::new(vec![c(half.mul(&s)).mul(&ux(0)), JetPoly::zero()]);
            let a2i = ai.pow(2);
            let (hr, kr) = if kq.is_zero() || kq == Q::int(-2) {
                let dth: Vec<(usize, CoeffExpr)> = {
                    let ti = th.try_inverse_structural()?;
                    vec![(0, th.partial(0).mul(&ti)), (1, th.partial(1).mul(&ti))]
                };
                let lg = fr.field.declare_generator("log_theta", move |_| dth, None)?;
                let is = integral(&s, 0, "S")?;
                if kq.is_zero() {
                    let w = th.mul(&lg.sub(&q(1)));
                    let inner = d1(&u(0).mul(&s)).mul(&u1i).mul(&b).mul(&ai).scale(&Q::new(1, 2));
                    let dbl = integral(&integral(&inner, 0, "S")?, 0, "S")?;
                    let h = w.mul(&u(0)).mul(&s).mul(&a2i).scale(&Q::new(1, 4));
                    let k = u(1).mul(&is).mul(&u1i).sub(&w.mul(&s).mul(&ai).scale(&Q::new(1, 4))).sub(&dbl);
                    (h, k)
                } else {
                    let h = lg.mul(&u(0)).mul(&s).mul(&a2i).scale(&Q::new(1, 4));
                    let k = lg.mul(&s).mul(&ai).scale(&Q::new(1, 4)).add(&is.mul(&u1i).mul(&ai).scale(&Q::new(1, 2)));
                    (h, k)
                }
            } else {
                let up = fr.field.power_frac(&th, (2 * d + n) as i32, (2 * d) as u32)?;
                let den = kk.mul(&kk.add(&q(2))).try_inverse_structural()?;
                let h = kk.add(&q(1)).mul(&u(0)).mul(&up).mul(&s).mul(&a2i).mul(&den);
                let k = up.mul(&s).mul(&ai).mul(&den).neg();
                (h, k)
            };
            (res, hr, kr)
        }
        other => return Err(CatalogError::Excluded(other.to_string(), "no first-order family".into())),
    };
    let x = degree0_pair(&fr, &seed.h, &seed.k).add(&res);
    let m = linear_coeffs(&x);
    let mut rel: Vec<(String, bool)> = Vec::new();
    let d2 = |e: &CoeffExpr| e.partial(1);
    match &fid {
        CaseId::T3 => {
            let x22 = m[0][0].add(&b.mul(&ai).mul(&m[0][1].add(&u(0).mul(&d2(&m[0][0]).sub(&d1(&m[0][1]))))));
            rel.push(("X22".into(), x22.sub(&m[1][1]).is_zero()));
            let i = m[1][0].sub(&b.mul(&ai).mul(&d1(&m[0][0].mul(&u(0))))).sub(&s);
            let integrand = d1(&m[0][0]).sub(&b.mul(&u(0)).mul(&ai).mul(&d1(&d1(&m[0][1]))));
            rel.push(("X21 integral".into(), d2(&i).sub(&integrand).is_zero()));
        }
        CaseId::N5 => {
            let f = a.mul(&d2(&seed.h)).add(&u(0).mul(&d2(&seed.k)));
            rel.push(("X11".into(), m[0][0].sub(&d1(&f)).is_zero()));
            rel.push(("X12".into(), m[0][1].sub(&d2(&f)).is_zero()));
            let den = a.scale(&Q::int(2)).mul(&u(0).add(&u(1))).sub(&b.mul(&u(0))).try_inverse_structural()?;
            let integrand = d1(&m[1][1]).add(&b.mul(&d2(&f)).add(&a.mul(&d1(&f))).sub(&a.mul(&m[1][1])).mul(&den));
            rel.push(("X21 integral".into(), d2(&m[1][0]).sub(&integrand).is_zero()));
        }
        _ => {
            let kq = fid.kappa().unwrap_or_else(Q::zero);
            let kk = kappa_expr(&kq);
            let k1 = kk.add(&q(1));
            let th = frame_base(&fid, &fr.params).unwrap();
            let g = a.mul(&d2(&seed.h)).add(&k1.mul(&u(0)).mul(&d2(&seed.k)));
            let f = a
                .mul(&d1(&seed.h))
                .add(&b.mul(&d2(&seed.h)))
                .add(&u(1).scale(&Q::int(2)).mul(&d2(&seed.k)))
                .add(&k1.mul(&u(0)).mul(&d1(&seed.k)))
                .sub(&seed.k);
            rel.push(("X12".into(), m[0][1].sub(&d2(&g)).is_zero()));
            rel.push(("X21".into(), m[1][0].sub(&d1(&f)).is_zero()));
            rel.push(("X22".into(), m[1][1].sub(&d2(&f)).is_zero()));
            let r = m[0][0].sub(&d1(&g));
            let lhs = th.mul(&d2(&r)).sub(&kk.mul(&a).mul(&r));
            let rhs = kk.mul(&b.mul(&d2(&g)).add(&a.mul(&d1(&g))).sub(&a.mul(&d2(&f))));
            rel.push(("R integral".into(), lhs.sub(&rhs).is_zero()));
        }
    }
    let (h, k) = (seed.h.add(&hr), seed.k.add(&kr));
    let out = if cc.swapped {
        FirstOrderFamily {
            x: swap_field(&x),
            relations: rel,
            residual_field: swap_field(&res),
            trivializer: (swap_expr(&h), swap_expr(&k)),
            field: fr.field,
        }
    } else {
        FirstOrderFamily { x, relations: rel, residual_field: res, trivializer: (h, k), field: fr.field }
    };
    Ok(out)
}

/// `X − (ω₁δH + ω₂δK)` for a first-order family.
pub fn firstorder_defect(cc: &CatalogCase, fam: &FirstOrderFamily) -> EvoField {
    fam.x.sub(&degree0_pair(cc, &fam.trivializer.0, &fam.trivializer.1))
}
