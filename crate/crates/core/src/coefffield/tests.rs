use super::*;
use crate::rational::Q;

fn u(i: usize) -> CoeffExpr {
    CoeffExpr::var(i - 1)
}

fn n4_theta(f: &mut Field) -> (CoeffExpr, CoeffExpr) {
    let e12 = f.param("eta12");
    let e22 = f.param("eta22");
    f.declare_nonzero(&e12).unwrap();
    f.declare_nonzero(&e22).unwrap();
    let b = &(&e22 * &u(1)) - &(&(&e12 * &u(2)).scale(&Q::int(2)));
    f.declare_nonzero(&b).unwrap();
    let theta = f.inv(&b).unwrap();
    (b, theta)
}

#[test]
fn polynomial_basics() {
    let a = &u(1) * &u(2);
    assert_eq!(a.partial(0), u(2));
    let z = &(&u(1) * &u(1)) - &(&u(1) * &u(1));
    assert!(z.is_zero());
}

#[test]
fn theta_times_base_is_one() {
    let mut f = Field::new(2);
    let (b, theta) = n4_theta(&mut f);
    let r = &(&theta * &b) - &CoeffExpr::one();
    assert!(r.is_zero());
}

#[test]
fn inadmissible_division() {
    let mut f = Field::new(2);
    let e = f.param("eta12");
    assert!(f.inv(&e).is_err());
    assert!(f.inv(&(&u(1) + &u(2))).is_err());
    f.declare_nonzero(&e).unwrap();
    assert!(f.inv(&e).is_ok());
    assert!(f.inv(&CoeffExpr::zero()).is_err());
}

#[test]
fn declared_root_generator() {
    let mut f = Field::new(2);
    let (_, theta) = n4_theta(&mut f);
    let th = theta.clone();
    let w = f
        .declare_generator(
            "w",
            |w| {
                (0..2)
                    .map(|i| {
                        let d = th.partial(i);
                        let r = &d * &f_inv_half(&th);
                        (i, &r * w)
                    })
                    .collect()
            },
            Some(Rewrite { q: 2, value: theta.clone() }),
        )
        .unwrap();
    let w2 = &w * &w;
    assert!((&w2 - &theta).is_zero());
    let lhs = w2.partial(0);
    let rhs = &(&w.partial(0) * &w).scale(&Q::int(2)) - &CoeffExpr::zero();
    assert!((&lhs - &theta.partial(0)).is_zero());
    assert!((&rhs - &theta.partial(0)).is_zero());
    for k in 0..4u32 {
        for r in 0..2u32 {
            let p = w.pow(2 * k + r);
            let expect = &theta.pow(k) * &w.pow(r);
            assert!((&p - &expect).is_zero());
        }
    }
    assert!(matches!(
        f.declare_generator("w", |_| vec![], None),
        Err(FieldError::NameCollision(_))
    ));
}

fn f_inv_half(theta: &CoeffExpr) -> CoeffExpr {
    theta.try_inverse_structural().unwrap().scale(&Q::new(1, 2))
}

#[test]
fn t3_exponential() {
    let mut f = Field::new(2);
    let e12 = f.param("eta12");
    let e22 = f.param("eta22");
    f.declare_nonzero(&e12).unwrap();
    f.declare_nonzero(&e22).unwrap();
    f.declare_nonzero(&u(1)).unwrap();
    let arg = f.div(&(&e12 * &u(2)).neg(), &(&e22 * &u(1))).unwrap();
    let e = CoeffExpr::exp(&arg);
    let d2 = e.partial(1);
    let expect = &f.div(&e12.neg(), &(&e22 * &u(1))).unwrap() * &e;
    assert!((&d2 - &expect).is_zero());
    let d1 = e.partial(0);
    let expect1 = &f.div(&(&e12 * &u(2)), &(&(&e22 * &u(1)) * &u(1))).unwrap() * &e;
    assert!((&d1 - &expect1).is_zero());
    let decl = f
        .declare_generator("E", |g| vec![(0, &expect1 * &f_ratio(&e, g)), (1, &expect * &f_ratio(&e, g))], None)
        .unwrap();
    assert!(!decl.partial(0).is_zero());
}

fn f_ratio(e: &CoeffExpr, g: &CoeffExpr) -> CoeffExpr {
    &e.try_inverse_structural().unwrap() * g
}

#[test]
fn constant_generator() {
    let mut f = Field::new(2);
    let c = f.declare_generator("c", |_| vec![], None).unwrap();
    assert!(c.partial(0).is_zero());
    assert!(c.partial(1).is_zero());
    assert!(c.is_field_constant());
}

#[test]
fn fractional_powers() {
    let mut f = Field::new(2);
    let e12 = f.param("eta12");
    f.declare_nonzero(&e12).unwrap();
    let b = &u(1) + &(&e12 * &u(2));
    f.declare_nonzero(&b).unwrap();
    let s = CoeffExpr::power_frac(&b, 1, 2).unwrap();
    let s3 = CoeffExpr::power_frac(&b, 3, 2).unwrap();
    assert!((&(&s * &b) - &s3).is_zero());
    let sm = CoeffExpr::power_frac(&b, -1, 2).unwrap();
    assert!((&(&sm * &s) - &CoeffExpr::one()).is_zero());
    let d = s.partial(1);
    let expect = &(&e12 * &sm).scale(&Q::new(1, 2)) - &CoeffExpr::zero();
    assert!((&d - &expect).is_zero());
}

#[test]
fn mixed_partials_commute() {
    let mut f = Field::new(2);
    let (b, theta) = n4_theta(&mut f);
    f.declare_nonzero(&u(1)).unwrap();
    let e22 = CoeffExpr::param("eta22");
    let arg = f.div(&u(2), &(&e22 * &u(1))).unwrap();
    let e = CoeffExpr::exp(&arg);
    let r = CoeffExpr::power_frac(&b, 1, 2).unwrap();
    let fun = CoeffExpr::func("F2", 0, 0);
    let samples = vec![
        &(&theta * &e) * &u(2),
        &(&r * &fun) + &theta.pow(3),
        &(&e * &r) * &(&fun * &u(1)),
        f.div(&(&u(1) * &u(2)), &b.pow(2)).unwrap(),
    ];
    for s in samples {
        let a = s.partial(0).partial(1);
        let c = s.partial(1).partial(0);
        assert!((&a - &c).is_zero(), "{} vs {}", a, c);
    }
}

#[test]
fn function_symbols() {
    let f2 = CoeffExpr::func("F2", 0, 0);
    assert_eq!(f2.partial(0), CoeffExpr::func("F2", 0, 1));
    assert!(f2.partial(1).is_zero());
    let p = &f2 * &u(1);
    assert_eq!(p.partial(0), &f2 + &(&CoeffExpr::func("F2", 0, 1) * &u(1)));
}

#[test]
fn substitution_rebuilds_generators() {
    let mut f = Field::new(2);
    let (b, _) = n4_theta(&mut f);
    let r = CoeffExpr::power_frac(&b, 1, 2).unwrap();
    let e22 = atoms::param_atom("eta22");
    let e12 = atoms::param_atom("eta12");
    let s = r
        .substitute(&|a| {
            if a == e22 || a == e12 {
                Some(CoeffExpr::one())
            } else {
                None
            }
        })
        .unwrap();
    let base = &u(1) - &u(2).scale(&Q::int(2));
    let expect = CoeffExpr::power_frac(&base, 1, 2).unwrap();
    assert!((&s - &expect).is_zero());
    assert!((&(&s * &s) - &base).is_zero());
}

#[test]
fn display_is_deterministic() {
    let x = &(&u(1) * &u(2)).scale(&Q::new(-1, 2)) + &u(1);
    assert_eq!(x.to_string(), "-u1*u2/2 + u1");
}
