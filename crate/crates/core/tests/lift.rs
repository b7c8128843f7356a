use pencilforge::brackets::schouten_unchecked;
use pencilforge::catalog::*;
use pencilforge::jetspace::{EvoField, JetPoly};
use pencilforge::lift::*;
use pencilforge::localops::{hydro_operator, inverse, MatDiffOp};
use pencilforge::{CoeffExpr, Field, Q};
use std::str::FromStr;

fn u(i: usize) -> CoeffExpr {
    CoeffExpr::var(i)
}
fn c(e: CoeffExpr) -> JetPoly {
    JetPoly::constant(e)
}
fn jx(i: usize, o: u32) -> JetPoly {
    JetPoly::jet(i, o)
}

fn kdv2() -> MatDiffOp {
    let mut p = MatDiffOp::zero(1);
    p.add_entry(0, 0, 1, &c(u(0).scale(&Q::int(2))));
    p.add_entry(0, 0, 0, &jx(0, 1));
    p
}

fn dx1() -> MatDiffOp {
    let mut p = MatDiffOp::zero(1);
    p.add_entry(0, 0, 1, &JetPoly::one());
    p
}

fn sample_fs() -> Vec<CoeffExpr> {
    vec![u(0), CoeffExpr::int(1), CoeffExpr::int(2), u(0).scale(&Q::int(-1))]
}

#[test]
fn constant_operator_lift() {
    let l = lift_operator(&dx1()).unwrap();
    let mut want = MatDiffOp::zero(2);
    want.add_entry(0, 1, 1, &JetPoly::one());
    want.add_entry(1, 0, 1, &JetPoly::one());
    assert_eq!(l.op, want);
    assert!(l.has_block_form());
}

#[test]
fn kdv_operator_lift() {
    let l = lift_operator(&kdv2()).unwrap();
    let mut fib = MatDiffOp::zero(1);
    fib.add_entry(0, 0, 1, &c(u(1).scale(&Q::int(2))));
    fib.add_entry(0, 0, 0, &jx(1, 1));
    assert_eq!(l.base_block(), kdv2());
    assert_eq!(l.fibre_block(), fib);
    assert!(l.has_block_form());
    assert!(l.op.is_skew_adjoint());
}

#[test]
fn fibre_dependence_rejected() {
    let mut p = MatDiffOp::zero(1);
    p.add_entry(0, 0, 1, &c(u(1)));
    assert!(matches!(lift_operator(&p), Err(LiftError::FibreDependence)));
}

#[test]
fn lifted_bn_operators_are_skew() {
    for id in CaseId::metric_pairs() {
        let cc = case_data(&id, &Params::symbolic()).unwrap();
        let l = lift_operator(&cc.omega2).unwrap();
        assert!(l.op.is_skew_adjoint(), "{}", id);
        assert!(l.has_block_form());
    }
}

#[test]
fn quadratic_functional_lift() {
    let h = c(u(0).pow(2).scale(&Q::new(1, 2)));
    let hh = lift_density(1, &h).unwrap();
    assert_eq!(hh, c(u(0).mul(&u(1))));
    assert_eq!(hh.variational_gradient(2), vec![c(u(1)), c(u(0))]);
}

#[test]
fn appendix_c_scalar() {
    let h = c(u(0).pow(3).scale(&Q::new(1, 6)));
    let x = pencilforge::miura::hamiltonian_vector_field(&dx1(), &h);
    assert_eq!(x.comps[0], c(u(0)).mul(&jx(0, 1)));
    let lx = lift_field(&x).unwrap();
    assert_eq!(lx.comps[1], c(u(1)).mul(&jx(0, 1)).add(&c(u(0)).mul(&jx(1, 1))));
    assert!(hamiltonian_lift_defect(&dx1(), &h).unwrap().is_zero());
}

#[test]
fn appendix_c_catalog() {
    let hs = [
        c(u(0).pow(2).mul(&u(1))),
        c(u(0)).mul(&jx(1, 1).pow(2)),
        c(u(1).pow(3)).add(&jx(0, 1).mul(&jx(1, 1)).mul(&c(u(0)))),
    ];
    for id in [CaseId::N4, CaseId::T3] {
        let cc = case_data(&id, &Params::symbolic()).unwrap();
        for h in &hs {
            assert!(hamiltonian_lift_defect(&cc.omega2, h).unwrap().is_zero(), "{} {:?}", id, h);
            assert!(hamiltonian_lift_defect(&cc.omega1, h).unwrap().is_zero());
        }
    }
    assert!(hamiltonian_lift_defect(&kdv2(), &c(u(0))).unwrap().is_zero());
}

#[test]
fn one_form_bracket_lift() {
    let cc = case_data(&CaseId::N5, &Params::symbolic()).unwrap();
    let fs = [
        c(u(0).pow(2).mul(&u(1))),
        c(u(1)).mul(&jx(0, 1).pow(2)),
        c(u(0).pow(3)).add(&c(u(0)).mul(&jx(1, 1).pow(2))),
    ];
    let forms: Vec<Vec<JetPoly>> = fs.iter().map(|f| f.variational_gradient(2)).collect();
    for a in 0..3 {
        for b in 0..3 {
            let d = one_form_lift_defect(&cc.omega1, &forms[a], &forms[b]).unwrap();
            assert!(d.iter().all(|p| p.is_zero()), "{} {}", a, b);
        }
    }
    assert!(matches!(one_form_bracket(&cc.omega2, &forms[0], &forms[1]), Err(LiftError::NotConstant)));
}

#[test]
fn derivation_commutes_with_dx() {
    let fs = [c(u(0).pow(2)).mul(&jx(1, 2)), jx(0, 1).pow(3).mul(&c(u(1))), c(u(0).mul(&u(1)).pow(2)).mul(&jx(0, 3))];
    for f in &fs {
        assert_eq!(v_derivation(2, &f.total_x()), v_derivation(2, f).total_x());
    }
}

#[test]
fn finite_tensor_examples() {
    let g = vec![vec![CoeffExpr::zero(), CoeffExpr::int(1)], vec![CoeffExpr::int(1), CoeffExpr::zero()]];
    let lg = lift_tensor(&Tensor::from_matrix(0, 2, &g)).unwrap().to_matrix();
    for i in 0..4 {
        for j in 0..4 {
            let want = if (i < 2) != (j < 2) { g[i % 2][j % 2].clone() } else { CoeffExpr::zero() };
            assert_eq!(lg[i][j], want);
        }
    }
    assert_eq!(lift_finite_tensor(TensorKind::Function, 1, &[u(0).pow(3)]).unwrap(), vec![u(0).pow(2).mul(&u(1)).scale(&Q::int(3))]);
    assert!(matches!(TensorKind::from_str("spinor"), Err(LiftError::UnsupportedKind(_))));
    assert!(matches!(lift_finite_tensor(TensorKind::Vector, 2, &[u(0)]), Err(LiftError::Size { .. })));
}

#[test]
fn contraction_compatibility() {
    let alpha = vec![u(0).mul(&u(1)), u(0).pow(2)];
    let x = vec![u(1).pow(2), u(0).add(&u(1))];
    let y = vec![u(0), u(1).pow(3)];
    let la = lift_finite_tensor(TensorKind::OneForm, 2, &alpha).unwrap();
    let lx = lift_finite_tensor(TensorKind::Vector, 2, &x).unwrap();
    let ly = lift_finite_tensor(TensorKind::Vector, 2, &y).unwrap();
    let ax = alpha[0].mul(&x[0]).add(&alpha[1].mul(&x[1]));
    let pair = la.iter().zip(&lx).fold(CoeffExpr::zero(), |s, (a, b)| s.add(&a.mul(b)));
    assert_eq!(lift_finite_tensor(TensorKind::Function, 2, &[ax]).unwrap()[0], pair);

    let g = Tensor::from_matrix(0, 2, &[vec![u(0), u(1)], vec![u(1), u(0).pow(2)]]);
    let gxy = contract(&g, &[], &[x.clone(), y.clone()]);
    let lg = lift_tensor(&g).unwrap();
    assert_eq!(lift_finite_tensor(TensorKind::Function, 2, &[gxy]).unwrap()[0], contract(&lg, &[], &[lx.clone(), ly.clone()]));

    let prod = Tensor::new(2, 1, 2, (0..8).map(|k| u(k % 2).pow(k as u32 / 2)).collect()).unwrap();
    let xy: Vec<CoeffExpr> = (0..2).map(|i| contract(&Tensor::new(2, 1, 2, prod.comps.clone()).unwrap(), &[(0..2).map(|a| CoeffExpr::int((a == i) as i64)).collect()], &[x.clone(), y.clone()])).collect();
    let lp = lift_tensor(&prod).unwrap();
    let lxy: Vec<CoeffExpr> = (0..4).map(|i| contract(&lp, &[(0..4).map(|a| CoeffExpr::int((a == i) as i64)).collect()], &[lx.clone(), ly.clone()])).collect();
    assert_eq!(lift_finite_tensor(TensorKind::Vector, 2, &xy).unwrap(), lxy);

    let a = Tensor::from_matrix(1, 1, &[vec![u(0), u(1).pow(2)], vec![CoeffExpr::int(3), u(0).mul(&u(1))]]);
    let ax: Vec<CoeffExpr> = (0..2).map(|i| a.get(&[i, 0]).mul(&x[0]).add(&a.get(&[i, 1]).mul(&x[1]))).collect();
    let la = lift_tensor(&a).unwrap();
    let lax: Vec<CoeffExpr> = (0..4).map(|i| (0..4).fold(CoeffExpr::zero(), |s, j| s.add(&la.get(&[i, j]).mul(&lx[j])))).collect();
    assert_eq!(lift_finite_tensor(TensorKind::Vector, 2, &ax).unwrap(), lax);
}

fn field2(n: usize) -> Field {
    let mut f = Field::new(n);
    for i in 0..n {
        f.declare_nonzero(&u(i)).unwrap();
    }
    f
}

#[test]
fn connection_lift() {
    let g = vec![vec![CoeffExpr::int(1), CoeffExpr::zero()], vec![CoeffExpr::zero(), u(0).pow(2)]];
    let f = field2(2);
    let gl = inverse(&g, &f).unwrap();
    let gam = Tensor::from_cube(&pencilforge::localops::christoffel(&gl, &f).unwrap());
    let lgam = lift_tensor(&gam).unwrap();
    assert_eq!(curvature(&lgam), lift_tensor(&curvature(&gam)).unwrap());
    let gt = Tensor::from_matrix(0, 2, &g);
    assert!(covariant_derivative_bilinear(&gt, &gam).comps.iter().all(|c| c.is_zero()));
    assert!(covariant_derivative_bilinear(&lift_tensor(&gt).unwrap(), &lgam).comps.iter().all(|c| c.is_zero()));
    let f4 = f.with_nvars(4);
    let lgl = inverse(&lift_tensor(&gt).unwrap().to_matrix(), &f4).unwrap();
    assert_eq!(Tensor::from_cube(&pencilforge::localops::christoffel(&lgl, &f4).unwrap()), lgam);

    let sph = vec![vec![CoeffExpr::int(1), CoeffExpr::zero()], vec![CoeffExpr::zero(), u(0).pow(4)]];
    let sg = Tensor::from_cube(&pencilforge::localops::christoffel(&inverse(&sph, &f).unwrap(), &f).unwrap());
    assert!(!curvature(&sg).comps.iter().all(|c| c.is_zero()));
    assert_eq!(curvature(&lift_tensor(&sg).unwrap()), lift_tensor(&curvature(&sg)).unwrap());
}

#[test]
fn hydro_route_agrees() {
    for id in CaseId::metric_pairs() {
        let cc = case_data(&id, &Params::symbolic()).unwrap();
        let f4 = cc.field.with_nvars(4);
        for g in [&cc.eta, &cc.g2] {
            let p = hydro_operator(g, &cc.field).unwrap();
            let lg = lift_tensor(&Tensor::from_matrix(2, 0, g)).unwrap().to_matrix();
            assert_eq!(lift_operator(&p).unwrap().op, hydro_operator(&lg, &f4).unwrap(), "{}", id);
            let cov = inverse(g, &cc.field).unwrap();
            let lcov = lift_tensor(&Tensor::from_matrix(0, 2, &cov)).unwrap().to_matrix();
            assert_eq!(inverse(&lcov, &f4).unwrap(), lg);
            assert_eq!(lifted_det_sign(g).unwrap(), Some(1));
        }
    }
}

#[test]
fn det_sign_scalar() {
    assert_eq!(lifted_det_sign(&[vec![u(0)]]).unwrap(), Some(-1));
    let g3: Vec<Vec<CoeffExpr>> = (0..3).map(|i| (0..3).map(|j| u(i).mul(&u(j)).add(&CoeffExpr::int((i == j) as i64))).collect()).collect();
    assert_eq!(lifted_det_sign(&g3).unwrap(), Some(-1));
}

#[test]
fn lift_schouten_catalog_pairs() {
    for id in CaseId::metric_pairs() {
        let cc = case_data(&id, &Params::symbolic()).unwrap();
        let x = deformation_field(&cc, &sample_fs()).unwrap();
        let d = pencilforge::brackets::lie_along_field(&x, &cc.omega2);
        let ops = [&cc.omega1, &cc.omega2];
        for a in ops {
            for b in ops {
                let t = lifted_schouten(a, b).unwrap();
                assert!(t.is_zero(), "{}", id);
            }
        }
        for a in ops {
            let t = lifted_schouten(a, &d).unwrap();
            for (m, part) in fibre_index_patterns(&t, 2).iter().enumerate() {
                assert!(part.is_zero(), "{} pattern {}", id, m);
            }
        }
    }
}

#[test]
fn lift_schouten_nonvanishing_stays_nonzero() {
    let mut p = MatDiffOp::zero(1);
    p.add_entry(0, 0, 1, &c(u(0).pow(2)));
    assert!(!schouten_unchecked(&p, &p).is_zero());
    assert!(!lifted_schouten(&p, &p).unwrap().is_zero());
    let _ = EvoField::zero(1);
}

#[test]
fn scalar_demo() {
    for f in [CoeffExpr::zero(), CoeffExpr::int(1), u(0)] {
        let r = scalar_lift_demo(&f).unwrap();
        assert!(r.passed(), "{:?}", r);
    }
}
