use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pencilforge"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).env_remove("PENCILFORGE_TRUNCATION").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn schema() -> serde_json::Value {
    serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap()
}

fn json_report(args: &[&str]) -> (i32, serde_json::Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let mut a: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    a.push("--json");
    a.push(&p);
    let (code, _) = run(&a);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (code, v)
}

fn validate(v: &serde_json::Value) {
    let s = schema();
    let compiled = jsonschema::JSONSchema::compile(&s).unwrap();
    let msgs: Vec<String> = match compiled.validate(v) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| e.to_string()).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {:?}", msgs);
}

#[test]
fn deformation_n5_passes_at_order_two() {
    let (code, out) = run(&["verify-deformation", "--case", "N5", "--eta12", "1", "--eta22", "1", "--F1", "u1", "--F2", "1"]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("[PASS] N5/poisson"));
    assert!(out.contains("eps-order 2"));
    assert!(out.trim_end().ends_with("PASSED"));
}

#[test]
fn invariants_t3_prints_lambda2() {
    let (code, out) = run(&["invariants", "--case", "T3", "--eta12", "1", "--eta22", "1", "--F2", "u1^2"]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("lambda2 = exp(-u2/u1)*u1^3"), "{}", out);
    assert!(out.contains("[PASS] T3/lambda2-residue"));
    assert!(out.contains("[PASS] T3/numeric-oracle"));
}

#[test]
fn lift_demo_passes() {
    let (code, out) = run(&["lift-demo"]);
    assert_eq!(code, 0);
    assert!(!out.contains("FAIL"));
}

#[test]
fn invalid_cases_exit_two() {
    for args in [
        vec!["verify-deformation", "--case", "N6(1)"],
        vec!["verify-deformation", "--case", "T1"],
        vec!["invariants", "--case", "X9"],
        vec!["verify-truncated", "--case", "N2"],
        vec!["verify-deformation", "--case", "N5", "--eta22", "zero"],
        vec!["verify-deformation", "--case", "N5", "--F1", "u1+"],
        vec!["verify-deformation", "--case", "N5", "--F1", "w7"],
    ] {
        let (code, _) = run(&args);
        assert_eq!(code, 2, "{:?}", args);
    }
}

#[test]
fn json_report_matches_schema() {
    let (code, v) = json_report(&["invariants", "--case", "N4", "--eta12", "1", "--eta22", "sym", "--seed", "5"]);
    assert_eq!(code, 0);
    validate(&v);
    assert_eq!(v["seed"], 5);
    assert_eq!(v["bindings"]["eta22"], "sym");
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    let (_, l) = json_report(&["list-cases"]);
    validate(&l);
}

#[test]
fn reports_are_reproducible() {
    let args = ["verify-firstorder", "--case", "N5", "--seed", "3"];
    let strip = |mut v: serde_json::Value| {
        for c in v["checks"].as_array_mut().unwrap() {
            c["seconds"] = serde_json::json!(0);
        }
        v
    };
    let (_, a) = json_report(&args);
    let (_, b) = json_report(&args);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn truncation_from_environment() {
    let out = bin()
        .args(["verify-deformation", "--case", "T3", "--F1", "u1", "--F2", "u1^2"])
        .env("PENCILFORGE_TRUNCATION", "4")
        .output()
        .unwrap();
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", s);
    assert!(s.contains("truncation: 4"));
    assert!(s.contains("eps-order 3"));
}

#[test]
fn operator_dump_format() {
    let (code, out) = run(&["verify-dispersionless", "--case", "N5"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.trim_start().starts_with("P1[1][2] = ") && l.contains("*dx^1")), "{}", out);
    assert!(out.lines().any(|l| l.trim_start().starts_with("P2[2][2] = ")));
}

#[test]
fn list_cases_shows_catalog() {
    let (code, out) = run(&["list-cases"]);
    assert_eq!(code, 0);
    for c in ["T3", "N4", "N6(-1/2)", "N6(-2)"] {
        assert!(out.contains(&format!("{} = ", c)), "{}", c);
    }
}
