use paretomarch_wasm::{scenario_names, Session};

#[test]
fn lists_single_budget_scenarios() {
    let names = scenario_names();
    assert!(names.lines().any(|n| n == "weather"));
    assert!(!names.lines().any(|n| n == "two-observers"));
}

#[test]
fn solve_trace_and_front() {
    let s = Session::new("fastest-isotropic", 41, 41).unwrap();
    assert_eq!(s.n(), 41);
    let px = s.heatmap(s.budget_bound());
    assert_eq!(px.len(), 41 * 41 * 4);
    // Some obstacle pixels are black, and the budget shrinks the feasible set.
    assert!(px.chunks(4).any(|c| c[..3] == [0, 0, 0]));
    let gray = |px: &[u8]| px.chunks(4).filter(|c| c[..3] == [48, 48, 48]).count();
    assert!(gray(&s.heatmap(0.5)) > gray(&px));

    let path = s.trace(s.start(), s.budget_bound()).unwrap();
    assert!(path.complete);
    let end = *path.points.last().unwrap();
    assert!((end[0] - 1.0).abs() < 1e-6 && (end[1] - 1.0).abs() < 1e-6, "{end:?}");
    assert!(path.spent <= s.budget_bound() + 0.05);

    let front = s.front(s.start()).unwrap();
    assert!(!front.is_empty());
    for w in front.windows(2) {
        assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1, "{w:?}");
    }
}

#[test]
fn rejects_bad_requests() {
    assert!(Session::new("two-observers", 21, 21).is_err());
    assert!(Session::new("fastest-isotropic", 500, 21).is_err());
    assert!(Session::new("nope", 21, 21).is_err());
    let s = Session::new("rcsp-check", 21, 21).unwrap();
    assert!(s.trace([2.0, 0.0], 1.0).is_err());
}
