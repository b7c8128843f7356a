use pencilforge::catalog::{case_data, CaseId, Params};
use pencilforge::jetspace::JetPoly;
use pencilforge::parse::{parse_expression, parse_jet, ParseError, Scope};
use pencilforge::{CoeffExpr, Field, Q};
use proptest::prelude::*;

fn u(i: usize) -> CoeffExpr {
    CoeffExpr::var(i)
}

fn sc() -> Scope {
    Scope::default()
}

#[test]
fn euler_density() {
    assert_eq!(parse_expression("u1^2/2", &sc()).unwrap(), u(0).pow(2).scale(&Q::new(1, 2)));
}

#[test]
fn bound_parameter() {
    let k = Q::int(3);
    let s = sc().bind("k", CoeffExpr::constant(k.clone()));
    let got = parse_expression("(1+k)*u1", &s).unwrap();
    assert_eq!(got, u(0).scale(&Q::int(4)));
    let cc = case_data(&CaseId::N6(k), &Params::symbolic()).unwrap();
    assert_eq!(cc.g2[0][1], got);
}

#[test]
fn jet_monomial() {
    let p = parse_jet("u1_x*u2_x", &sc()).unwrap();
    assert_eq!(p, JetPoly::jet(0, 1).mul(&JetPoly::jet(1, 1)));
    assert_eq!(p.degrees(), vec![2]);
}

#[test]
fn jets_and_operators() {
    let s = sc();
    assert_eq!(parse_jet("u2_xx", &s).unwrap(), JetPoly::jet(1, 2));
    assert_eq!(parse_jet("u1_3", &s).unwrap(), JetPoly::jet(0, 3));
    assert_eq!(parse_jet("u1_x^2 - 2*u1_x*u1_x", &s).unwrap(), JetPoly::jet(0, 1).pow(2).neg());
    assert_eq!(parse_expression("u1^-2", &s).unwrap(), parse_expression("1/u1^2", &s).unwrap());
    assert_eq!(parse_expression("u1^(-1)*u1", &s).unwrap(), CoeffExpr::one());
    assert_eq!(parse_expression("2^3 - 3/4", &s).unwrap(), CoeffExpr::constant(Q::new(29, 4)));
    assert_eq!(parse_expression("−u2", &s).unwrap(), u(1).neg());
    assert_eq!(parse_jet("u1_x/u2_x", &s).unwrap(), JetPoly::jet(0, 1).mul(&JetPoly::jet(1, 1).pow_i(-1)));
}

trait PowI {
    fn pow_i(&self, k: i32) -> JetPoly;
}

impl PowI for JetPoly {
    fn pow_i(&self, k: i32) -> JetPoly {
        let (m, c) = self.terms().next().unwrap();
        let m: Vec<_> = m.iter().map(|&(v, e)| (v, e * k)).collect();
        JetPoly::monomial(m.into_iter().collect(), c.clone())
    }
}

#[test]
fn transcendental_atoms() {
    let s = sc();
    let e = parse_expression("exp(-u2/u1)*u1^3", &s).unwrap();
    let arg = u(1).neg().mul(&u(0).try_inverse_structural().unwrap());
    assert_eq!(e, CoeffExpr::exp(&arg).mul(&u(0).pow(3)));
    let r = parse_expression("sqrt(u1)", &s).unwrap();
    assert_eq!(r.mul(&r), u(0));
    let c = parse_expression("root(u1, 3)", &s).unwrap();
    assert_eq!(c.pow(3), u(0));
    assert_eq!(parse_jet("u1_x*log(u2_x)", &s).unwrap(), JetPoly::jet(0, 1).mul(&JetPoly::log_ux(1)));
}

#[test]
fn field_functions_and_params() {
    let mut f = Field::new(2);
    f.param("eta12");
    f.function("f", 0);
    let s = Scope::of_field(&f);
    assert_eq!(parse_expression("f'", &s).unwrap(), CoeffExpr::func("f", 0, 1));
    assert_eq!(parse_expression("f[u2]", &s).unwrap(), CoeffExpr::func("f", 1, 0));
    assert_eq!(parse_expression("eta12*f", &s).unwrap(), CoeffExpr::param("eta12").mul(&CoeffExpr::func("f", 0, 0)));
}

#[test]
fn errors_report_positions() {
    let s = sc();
    assert!(matches!(parse_jet("u1 +", &s), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_jet("(u1", &s), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_jet("u1 u2", &s), Err(ParseError::Syntax { .. })));
    match parse_jet("u1 + w", &s) {
        Err(ParseError::UnknownSymbol { pos, name }) => {
            assert_eq!(pos, 5);
            assert_eq!(name, "w");
        }
        other => panic!("{:?}", other),
    }
    assert!(matches!(parse_jet("u3", &s), Err(ParseError::UnknownSymbol { .. })));
    assert!(matches!(parse_expression("u1_x", &s), Err(ParseError::NotJetFree)));
    assert!(matches!(parse_jet("1/0", &s), Err(ParseError::Field { .. })));
    assert!(matches!(parse_jet("u1^u2", &s), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_jet("root(u1, 1)", &s), Err(ParseError::Syntax { .. })));
    assert!(matches!(parse_jet("log(u1)", &s), Err(ParseError::Syntax { .. })));
}

fn arb_coeff() -> impl Strategy<Value = CoeffExpr> {
    prop::collection::vec((-4i64..5, 1i64..4, 0u32..3, 0u32..3), 1..4).prop_map(|ts| {
        ts.into_iter().fold(CoeffExpr::zero(), |acc, (n, d, a, b)| acc.add(&u(0).pow(a).mul(&u(1).pow(b)).scale(&Q::new(n, d))))
    })
}

fn arb_jet() -> impl Strategy<Value = JetPoly> {
    let mono = prop::collection::vec((0usize..2, 1u32..4, 1u32..3), 0..3);
    prop::collection::vec((arb_coeff(), mono, any::<bool>()), 1..4).prop_map(|ts| {
        let mut acc = JetPoly::zero();
        for (c, m, denom) in ts {
            let mut t = JetPoly::constant(if denom { c.mul(&u(0).try_inverse_structural().unwrap()) } else { c });
            for (i, o, e) in m {
                t = t.mul(&JetPoly::jet(i, o).pow(e));
            }
            acc = acc.add(&t);
        }
        acc
    })
}

proptest! {
    #[test]
    fn print_parse_round_trip(p in arb_jet()) {
        let text = p.to_string();
        let back = parse_jet(&text, &sc()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn coefficient_round_trip(c in arb_coeff(), k in 0u32..3) {
        let e = c.mul(&CoeffExpr::exp(&u(1).mul(&u(0).try_inverse_structural().unwrap()))).mul(&u(0).pow(k));
        prop_assert_eq!(parse_expression(&e.to_string(), &sc()).unwrap(), e);
    }
}
