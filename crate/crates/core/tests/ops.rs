use pencilforge::brackets::{lie_along_field, schouten_bracket, schouten_unchecked};
use pencilforge::jetspace::{EvoField, JetPoly};
use pencilforge::localops::*;
use pencilforge::{CoeffExpr, Field, Q};
use proptest::prelude::*;

fn c(e: CoeffExpr) -> JetPoly {
    JetPoly::constant(e)
}
fn u(i: usize) -> CoeffExpr {
    CoeffExpr::var(i - 1)
}
fn j(i: usize, o: u32) -> JetPoly {
    JetPoly::jet(i - 1, o)
}
fn ce(n: i64) -> CoeffExpr {
    CoeffExpr::int(n)
}

fn entry(ops: &[(usize, JetPoly)]) -> Vec<JetPoly> {
    let top = ops.iter().map(|o| o.0).max().unwrap_or(0);
    let mut v = vec![JetPoly::zero(); top + 1];
    for (m, p) in ops {
        v[*m] = v[*m].add(p);
    }
    v
}

fn op2(e: [[Vec<(usize, JetPoly)>; 2]; 2]) -> MatDiffOp {
    let mut m = MatDiffOp::zero(2);
    for (a, row) in e.iter().enumerate() {
        for (b, ent) in row.iter().enumerate() {
            for (o, p) in ent {
                m.add_entry(a, b, *o, p);
            }
        }
    }
    m
}

fn scalar(ops: &[(usize, JetPoly)]) -> MatDiffOp {
    let mut m = MatDiffOp::zero(1);
    m.set_entry(0, 0, entry(ops));
    m
}

#[test]
fn total_x_examples() {
    assert_eq!(JetPoly::u(0).total_x(), j(1, 1));
    let f = c(u(1)).mul(&j(2, 1));
    assert_eq!(f.total_x(), j(1, 1).mul(&j(2, 1)).add(&c(u(1)).mul(&j(2, 2))));
    let cf = CoeffExpr::func("c", 0, 0);
    let l = c(cf.clone()).mul(&JetPoly::log_ux(0));
    let expect = c(cf.partial(0)).mul(&j(1, 1)).mul(&JetPoly::log_ux(0)).add(&c(cf).mul(&j(1, 2)).mul(&j(1, 1).pow_i(-1)));
    assert_eq!(l.total_x(), expect);
}

trait PowI {
    fn pow_i(&self, k: i32) -> JetPoly;
}
impl PowI for JetPoly {
    fn pow_i(&self, k: i32) -> JetPoly {
        let (m, _) = self.terms().next().unwrap();
        let mut mm = m.clone();
        for t in mm.iter_mut() {
            t.1 *= k;
        }
        JetPoly::monomial(mm, CoeffExpr::one())
    }
}

#[test]
fn euler_examples() {
    let d = c(&u(1) * &u(1)).scale_q(&Q::new(1, 2));
    assert_eq!(d.euler(0), c(u(1)));
    let k = CoeffExpr::param("c");
    let h = c(k.clone()).mul(&j(1, 1)).mul(&JetPoly::log_ux(0));
    let expect = c(k.neg()).mul(&j(1, 2)).mul(&j(1, 1).pow_i(-1));
    assert_eq!(h.euler(0), expect);
    let h1 = &(&u(1) * &u(2)) * &u(2);
    let h2 = &(&u(1) * &u(1)) * &u(1);
    let dens = c(h1.clone()).mul(&j(1, 1)).add(&c(h2.clone()).mul(&j(2, 1)));
    let r = &h2.partial(0) - &h1.partial(1);
    assert_eq!(dens.euler(0), c(r.clone()).mul(&j(2, 1)));
    assert_eq!(dens.euler(1), c(r.neg()).mul(&j(1, 1)));
}

#[test]
fn prolong_examples() {
    let x = EvoField::new(vec![c(u(1)).mul(&j(1, 1))]);
    let p = x.prolong(&j(1, 1));
    assert_eq!(p, j(1, 1).pow(2).add(&c(u(1)).mul(&j(1, 2))));
    assert!(EvoField::zero(1).prolong(&j(1, 3)).is_zero());
    let t = EvoField::new(vec![j(1, 1), j(2, 1)]);
    let f = c(&u(1) * &u(2)).mul(&j(2, 2)).add(&j(1, 1).pow(3));
    assert_eq!(t.prolong(&f), f.total_x());
}

#[test]
fn frechet_examples() {
    let x = EvoField::new(vec![c(u(1)).mul(&j(1, 1))]);
    let (l, a) = x.frechet_pair();
    assert_eq!(l, scalar(&[(1, c(u(1))), (0, j(1, 1))]));
    assert_eq!(a, scalar(&[(1, c(u(1).neg()))]));
    let f = CoeffExpr::func("F", 0, 0);
    let y = EvoField::new(vec![c(f.clone()).mul(&j(1, 2))]);
    assert_eq!(y.frechet(), scalar(&[(2, c(f.clone())), (0, c(f.partial(0)).mul(&j(1, 2)))]));
    assert_eq!(EvoField::new(vec![JetPoly::u(0)]).frechet(), MatDiffOp::identity(1));
}

#[test]
fn adjoint_and_compose() {
    let d = scalar(&[(1, JetPoly::one())]);
    assert_eq!(d.adjoint(), d.neg());
    let kdv = scalar(&[(1, c(u(1).scale(&Q::int(2)))), (0, j(1, 1))]);
    assert_eq!(kdv.adjoint(), kdv.neg());
    let left = d.compose(&scalar(&[(0, c(u(1)))])).unwrap();
    assert_eq!(left, scalar(&[(1, c(u(1))), (0, j(1, 1))]));
    let f = CoeffExpr::func("f", 0, 0);
    let d2f = scalar(&[(2, JetPoly::one())]).compose(&scalar(&[(0, c(f.clone()))])).unwrap();
    let f1 = f.partial(0);
    let f2 = f1.partial(0);
    let expect = scalar(&[
        (2, c(f)),
        (1, c(f1.scale(&Q::int(2))).mul(&j(1, 1))),
        (0, c(f2).mul(&j(1, 1).pow(2)).add(&c(f1).mul(&j(1, 2)))),
    ]);
    assert_eq!(d2f, expect);
    assert_eq!(kdv.compose(&MatDiffOp::identity(1)).unwrap(), kdv);
    assert!(kdv.compose(&MatDiffOp::identity(2)).is_err());
}

#[test]
fn hydro_examples() {
    let field = Field::new(2);
    let mut f = field.clone();
    f.declare_nonzero(&u(1)).unwrap();
    let g = vec![vec![ce(0), u(1).neg()], vec![u(1).neg(), ce(0)]];
    let p = hydro_operator(&g, &f).unwrap();
    let expect = op2([[vec![], vec![(1, c(u(1).neg()))]], [vec![(1, c(u(1).neg())), (0, j(1, 1).neg())], vec![]]]);
    assert_eq!(p, expect);
    let g5 = vec![vec![ce(0), u(1)], vec![u(1), (&u(1) + &u(2)).scale(&Q::int(2))]];
    let p5 = hydro_operator(&g5, &f).unwrap();
    let e5 = op2([
        [vec![], vec![(1, c(u(1))), (0, j(1, 1))]],
        [vec![(1, c(u(1)))], vec![(1, c((&u(1) + &u(2)).scale(&Q::int(2)))), (0, j(1, 1).add(&j(2, 1)))]],
    ]);
    assert_eq!(p5, e5);
    assert!(p5.is_skew_adjoint());
    let eta = vec![vec![ce(0), ce(1)], vec![ce(1), ce(3)]];
    assert_eq!(hydro_operator(&eta, &field).unwrap(), MatDiffOp::from_coeff_matrix(&eta, 1));
    let degen = vec![vec![u(1), u(1)], vec![u(1), u(1)]];
    assert!(hydro_operator(&degen, &f).is_err());
}

fn sc(entries: &[(usize, usize, usize, i64)]) -> StructureConstants {
    let mut b = vec![vec![vec![ce(0); 2]; 2]; 2];
    for &(i, jj, k, v) in entries {
        b[i][jj][k] = ce(v);
    }
    b
}

#[test]
fn bn_examples() {
    let n4 = sc(&[(0, 1, 0, 1), (1, 1, 1, 1)]);
    let p = bn_operator(&n4);
    let e = op2([
        [vec![], vec![(1, c(u(1))), (0, j(1, 1))]],
        [vec![(1, c(u(1)))], vec![(1, c(u(2).scale(&Q::int(2)))), (0, j(2, 1))]],
    ]);
    assert_eq!(p, e);
    assert!(bn_axioms_hold(&n4));
    let t2 = sc(&[(0, 0, 1, 1)]);
    let e2 = op2([[vec![(1, c(u(2).scale(&Q::int(2)))), (0, j(2, 1))], vec![]], [vec![], vec![]]]);
    assert_eq!(bn_operator(&t2), e2);
    assert!(bn_operator(&sc(&[])).is_zero());
}

#[test]
fn schouten_examples() {
    let eta = vec![vec![ce(0), ce(1)], vec![ce(1), ce(2)]];
    let p = MatDiffOp::from_coeff_matrix(&eta, 1);
    assert!(schouten_bracket(&p, &p).unwrap().is_zero());
    let kdv = scalar(&[(1, c(u(1).scale(&Q::int(2)))), (0, j(1, 1))]);
    assert!(schouten_bracket(&kdv, &kdv).unwrap().is_zero());
    let d = scalar(&[(1, JetPoly::one())]);
    assert!(schouten_bracket(&kdv, &d).unwrap().is_zero());
    // u∂ alone is not skew
    assert!(schouten_bracket(&scalar(&[(1, c(u(1)))]), &d).is_err());
    // non-flat metric fails Jacobi
    let mut f = Field::new(2);
    f.declare_nonzero(&u(1)).unwrap();
    f.declare_nonzero(&u(2)).unwrap();
    let g = vec![vec![u(1), ce(0)], vec![ce(0), u(1)]];
    let bad = hydro_operator(&g, &f).unwrap();
    assert!(!schouten_unchecked(&bad, &bad).is_zero());
}

#[test]
fn schouten_symmetric() {
    let n4 = bn_operator(&sc(&[(0, 1, 0, 1), (1, 1, 1, 1)]));
    let t = bn_operator(&sc(&[(0, 0, 0, 1), (0, 1, 1, 1), (1, 0, 1, 1)]));
    assert_eq!(schouten_unchecked(&n4, &t), schouten_unchecked(&t, &n4));
    let third = scalar(&[(3, JetPoly::one())]).embed(2, 1, 1);
    let a = schouten_unchecked(&n4, &third);
    let b = schouten_unchecked(&third, &n4);
    assert_eq!(a, b);
    let s = schouten_unchecked(&n4.add(&third), &n4.add(&third));
    let lin = schouten_unchecked(&n4, &n4).add(&a.scale_q(&Q::int(2))).add(&schouten_unchecked(&third, &third));
    assert_eq!(s, lin);
}

#[test]
fn lie_hamiltonian_vanishes() {
    let d = scalar(&[(1, JetPoly::one())]);
    let x = EvoField::new(vec![c(u(1)).mul(&j(1, 1))]);
    assert!(lie_along_field(&x, &d).is_zero());
    assert!(lie_along_field(&EvoField::zero(1), &d).is_zero());
    let kdv = scalar(&[(1, c(u(1).scale(&Q::int(2)))), (0, j(1, 1))]);
    let h = c(&(&u(1) * &u(1)) * &u(1));
    let xh = EvoField::new(kdv.apply(&h.variational_gradient(1)));
    assert!(lie_along_field(&xh, &kdv).is_zero());
}

#[test]
fn degree_bookkeeping() {
    let f = c(u(1)).mul(&j(1, 2)).add(&j(2, 1).pow(2));
    assert!(f.is_homogeneous(2));
    assert!(f.total_x().is_homogeneous(3));
}

fn arb_jet() -> impl Strategy<Value = JetPoly> {
    let term = (0..3i64, 0..3i64, 0usize..4, 0u32..4, 1u32..3, -3i64..4);
    prop::collection::vec(term, 1..5).prop_map(|ts| {
        let mut p = JetPoly::zero();
        for (a, b, comp, ord, pw, k) in ts {
            let coef = &u(1).pow(a as u32) * &u(2).pow(b as u32);
            let v = if ord == 0 { JetPoly::one() } else { JetPoly::jet(comp % 2, ord).pow(pw) };
            p = p.add(&c(coef.scale(&Q::int(k))).mul(&v));
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn euler_kills_total_derivatives(f in arb_jet()) {
        let g = f.total_x();
        prop_assert!(g.euler(0).is_zero());
        prop_assert!(g.euler(1).is_zero());
    }

    #[test]
    fn prolong_commutes_with_dx(f in arb_jet(), x1 in arb_jet(), x2 in arb_jet()) {
        let x = EvoField::new(vec![x1, x2]);
        prop_assert_eq!(x.prolong(&f.total_x()), x.prolong(&f).total_x());
    }

    #[test]
    fn adjoint_involution(a in arb_jet(), b in arb_jet()) {
        let op = scalar(&[(2, a), (1, b)]);
        prop_assert_eq!(op.adjoint().adjoint(), op);
    }

    #[test]
    fn partial_dx_commutation(f in arb_jet(), comp in 0usize..2, t in 1u32..4) {
        let lhs = f.partial(comp, t).total_x();
        let rhs = f.total_x().partial(comp, t).sub(&f.partial(comp, t - 1));
        prop_assert_eq!(lhs, rhs);
    }
}
