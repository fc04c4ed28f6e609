use fsbc::spectral::Grid;
use fsbc::verification::run_checks;

fn default_grid() -> Grid {
    Grid::new(16, 16, 16, 10.0).unwrap()
}

#[test]
fn default_grid_passes_every_check() {
    let out = run_checks(&default_grid(), false);
    assert!(out.len() > 10);
    for c in &out {
        assert!(c.passed, "{c:?}");
    }
}

#[test]
fn flat_checks_hold_to_roundoff() {
    let out = run_checks(&default_grid(), true);
    assert!(out.iter().all(|c| c.name.starts_with("flat.") && c.passed && c.bound <= 1e-12), "{out:?}");
}

#[test]
fn corrupted_derivative_is_caught_by_name() {
    let out = run_checks(&default_grid().with_derivative_fault(1e-3), false);
    let failed: Vec<&str> = out.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failed.contains(&"flat.spectral_derivative"), "{failed:?}");
    assert!(failed.contains(&"operators.gradient_pullback"), "{failed:?}");
}
