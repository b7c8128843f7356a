use pencilforge::brackets::pencil_residuals;
use pencilforge::jetspace::{EvoField, JetPoly};
use pencilforge::localops::{GradedPencil, MatDiffOp};
use pencilforge::miura::*;
use pencilforge::{CoeffExpr, Q};

fn u() -> CoeffExpr {
    CoeffExpr::var(0)
}
fn c(e: CoeffExpr) -> JetPoly {
    JetPoly::constant(e)
}
fn jx(o: u32) -> JetPoly {
    JetPoly::jet(0, o)
}

fn scalar(ops: &[(usize, JetPoly)]) -> MatDiffOp {
    let mut m = MatDiffOp::zero(1);
    for (o, p) in ops {
        m.add_entry(0, 0, *o, p);
    }
    m
}

fn kdv_pencil(n: usize) -> GradedPencil {
    let w2 = scalar(&[(1, c(u().scale(&Q::int(2)))), (0, jx(1))]);
    let w1 = scalar(&[(1, JetPoly::one())]);
    GradedPencil::new(w2, w1, n)
}

fn map1(a: i64, b: i64, cc: i64) -> MiuraMap {
    let f1 = c(&u() * &CoeffExpr::int(a)).mul(&jx(1));
    let f2 = c(CoeffExpr::int(b)).mul(&jx(2)).add(&c(u().scale(&Q::int(cc))).mul(&jx(1).pow(2)));
    MiuraMap::new(1, vec![vec![f1], vec![f2]], 3).unwrap()
}

#[test]
fn identity_map() {
    let p = kdv_pencil(3);
    assert_eq!(pushforward_miura(&p, &MiuraMap::identity(1, 3)), p);
}

#[test]
fn inverse_roundtrip() {
    let m = map1(1, 2, -1);
    let id = m.then(&m.inverse());
    assert!(id.is_identity(), "{:?}", id);
    assert!(m.inverse().then(&m).is_identity());
}

#[test]
fn translation_map_keeps_poisson() {
    let m = MiuraMap::new(1, vec![vec![jx(1).scale_q(&Q::new(3, 2))]], 3).unwrap();
    let p = pushforward_miura(&kdv_pencil(3), &m);
    assert_eq!(p.layer(0), kdv_pencil(3).layer(0));
    assert!(pencil_residuals(&p, 3).vanishes());
    assert!(p.is_skew());
    assert!(p.audit_homogeneity().is_ok());
}

#[test]
fn group_law() {
    let (m1, m2) = (map1(1, 2, -1), map1(-2, 1, 3));
    let p = kdv_pencil(3);
    let a = pushforward_miura(&pushforward_miura(&p, &m1), &m2);
    let b = pushforward_miura(&p, &m1.then(&m2));
    assert_eq!(a, b);
    assert!(pencil_residuals(&b, 3).vanishes());
}

#[test]
fn flow_agrees_with_pushforward() {
    let ys = [
        EvoField::new(vec![c(u()).mul(&jx(1))]),
        EvoField::new(vec![c(&u() * &u()).mul(&jx(2)).add(&c(u()).mul(&jx(1).pow(2)))]),
        EvoField::new(vec![jx(2).scale_q(&Q::int(3))]),
    ];
    for y in &ys {
        let p = kdv_pencil(3);
        let a = exp_ad_flow(y, &p, 3);
        let b = pushforward_miura(&p, &MiuraMap::from_flow(y, 3));
        assert_eq!(a, b, "Y = {:?}", y);
    }
    assert_eq!(exp_ad_flow(&EvoField::zero(1), &kdv_pencil(3), 3), kdv_pencil(3));
}

#[test]
fn hamiltonian_fields() {
    let d = scalar(&[(1, JetPoly::one())]);
    let h = c(u().pow(3).scale(&Q::new(1, 6)));
    assert_eq!(hamiltonian_vector_field(&d, &h).comps[0], c(u()).mul(&jx(1)));
    let lg = jx(1).mul(&JetPoly::log_ux(0));
    assert!(!hamiltonian_vector_field(&d, &lg).is_polynomial());
}

#[test]
fn rejects_inhomogeneous_layers() {
    assert!(MiuraMap::new(1, vec![vec![jx(2)]], 3).is_err());
}
