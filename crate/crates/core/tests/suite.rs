use pencilforge::catalog::{case_data, CaseId, Params};
use pencilforge::suite::*;

fn opts(case: &str) -> RunOptions {
    RunOptions { case: Some(case.into()), ..Default::default() }
}

#[test]
fn command_names_round_trip() {
    for c in Command::ALL {
        assert_eq!(Command::from_name(c.name()), Some(c));
    }
    assert_eq!(Command::from_name("verify-everything"), None);
}

#[test]
fn reports_are_deterministic() {
    let mut o = opts("N5");
    o.seed = Some(11);
    let a = run(Command::Invariants, &o).unwrap().without_timings();
    let b = run(Command::Invariants, &o).unwrap().without_timings();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.passed);
    assert_eq!(a.exit_code(), 0);
}

#[test]
fn checks_are_sorted_and_prefixed() {
    let r = run(Command::VerifyDispersionless, &opts("T3")).unwrap();
    let names: Vec<_> = r.checks.iter().map(|c| c.name.clone()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(names.iter().all(|n| n.starts_with("T3/")));
}

#[test]
fn invalid_cases_are_rejected() {
    for bad in ["N7", "T4", "N6(-1)", "N6(x)"] {
        let e = run(Command::VerifyDeformation, &opts(bad)).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{}", bad);
    }
    let mut o = opts("N5");
    o.eta12 = Some("one".into());
    assert!(matches!(run(Command::Invariants, &o), Err(RunError::InvalidArgument(_))));
    let mut o = opts("T3");
    o.f[0] = Some("u1 +".into());
    assert!(matches!(run(Command::Invariants, &o), Err(RunError::InvalidArgument(_))));
}

#[test]
fn corrupted_controls_fail_the_report() {
    let mut r = VerificationReport::new(Command::VerifyDeformation, None, 3, None);
    r.checks = negative_controls();
    let mut r = r.finish();
    assert!(r.passed);
    for c in &mut r.checks {
        c.status = Status::Fail;
    }
    let r = r.finish();
    assert!(!r.passed);
    assert_eq!(r.exit_code(), 1);
    assert_eq!(r.failures().len(), 3);
}

#[test]
fn skipped_checks_keep_exit_zero() {
    let mut ch = Checks::default();
    ch.run("a", "x", || Ok(Outcome::skip("not applicable")));
    ch.run("b", "x", || Ok(Outcome::truth(true)));
    let mut r = VerificationReport::new(Command::ListCases, None, 3, None);
    r.checks = ch.results;
    let r = r.finish();
    assert_eq!(r.exit_code(), 0);
    assert_eq!(r.check("a").unwrap().status, Status::Skipped);
}

#[test]
fn errors_become_failures() {
    let mut ch = Checks::default();
    ch.run("broken", "x", || Err("division by zero".into()));
    assert_eq!(ch.results[0].status, Status::Fail);
    assert_eq!(ch.results[0].note.as_deref(), Some("division by zero"));
}

#[test]
fn random_families_are_seeded() {
    assert_eq!(random_families(5, 2), random_families(5, 2));
    assert_ne!(random_families(5, 2), random_families(6, 2));
}

#[test]
fn first_order_families_are_trivial() {
    let cc = case_data(&CaseId::T3, &Params::symbolic()).unwrap();
    let mut ch = Checks::default();
    firstorder_checks(&mut ch, &cc, &sample_firstorder_seed(), "s");
    assert!(!ch.results.is_empty());
    assert!(ch.results.iter().all(|c| c.status == Status::Pass), "{:?}", ch.results);
}

#[test]
fn list_cases_covers_catalog() {
    let r = run(Command::ListCases, &RunOptions::default()).unwrap();
    for id in ["T1", "T3", "N4", "N5"] {
        assert!(r.outputs.keys().any(|k| k.contains(id)), "{}", id);
    }
}
