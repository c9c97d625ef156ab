use irtensor::verify::{run, Status, VerifyOptions, MODULES};

#[test]
fn full_suite_passes_and_is_deterministic() {
    let a = run(&VerifyOptions::default());
    assert!(a.passed, "{:#?}", a.checks.iter().filter(|c| c.status == Status::Fail).collect::<Vec<_>>());
    let b = run(&VerifyOptions::default());
    assert_eq!(a, b);
    for m in MODULES {
        assert!(a.checks.iter().any(|c| c.module == m));
    }
}

#[test]
fn seeds_change_random_checks_only() {
    let opts = |seed| VerifyOptions { module: Some("spin_rotations".into()), seed: Some(seed), ..Default::default() };
    let a = run(&opts(1));
    let b = run(&opts(2));
    assert!(a.passed && b.passed);
    assert_eq!(a.checks.len(), b.checks.len());
    let changed = a.checks.iter().zip(&b.checks).filter(|(x, y)| x.max_error != y.max_error).count();
    assert!(changed > 0);
    let strict = run(&VerifyOptions { tol: Some(1e-15), module: Some("spin_rotations".into()), ..Default::default() });
    assert!(strict.checks.iter().all(|c| c.tolerance == 1e-15));
    assert!(!strict.passed);
}
