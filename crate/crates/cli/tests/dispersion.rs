use fsbc::dynamics::{DynamicsConfig, Stepper};
use fsbc::elliptic::SolverSettings;
use fsbc::geometry::CutoffProfile;
use fsbc::spectral::{Grid, SurfaceField};
use fsbc_cli::dispersion::{capillary_frequency, measure_frequency, modal_amplitude};

fn stepper(n: usize, nz: usize, b: f64, eps: f64) -> Stepper {
    let g = Grid::new(n, n, nz, b).unwrap();
    // shallow depths have no admissible band, so the slope bound is not enforced here
    let c = CutoffProfile::new_unchecked(&g, 0.0, b, eps).unwrap();
    Stepper::new(&g, c, SolverSettings::default(), DynamicsConfig::default()).unwrap()
}

#[test]
fn closed_form_values() {
    assert!((capillary_frequency(1.0, 1.0, 10.0) - 1.0).abs() < 1e-8);
    assert!((capillary_frequency(1.0, 1.0, 0.5).powi(2) - 0.5f64.tanh()).abs() < 1e-15);
    let g = Grid::new(16, 16, 9, 1.0).unwrap();
    let psi = SurfaceField::from_fn(&g, |x, y| 0.3 * (2.0 * x).cos() + (x + y).sin());
    assert!((modal_amplitude(&g, &psi, 2) - 0.3).abs() < 1e-14);
    assert!(modal_amplitude(&g, &psi, 1).abs() < 1e-14);
}

#[test]
fn shallow_slab_follows_tanh_law() {
    let mut s = stepper(16, 13, 0.5, 1e-4);
    let row = measure_frequency(&mut s, 1, 1e-4, 2, 2.0, 1.0).unwrap();
    assert!((row.predicted.powi(2) - 0.5f64.tanh()).abs() < 1e-12);
    assert!(row.rel_error < 0.02, "{row:?}");
}

#[test]
fn halving_the_amplitude_leaves_the_frequency_unchanged() {
    let mut s = stepper(16, 17, 10.0, 1e-4);
    let full = measure_frequency(&mut s, 1, 1e-4, 2, 2.0, 1.0).unwrap();
    let half = measure_frequency(&mut s, 1, 5e-5, 2, 2.0, 1.0).unwrap();
    let shift = (full.measured - half.measured).abs() / full.measured;
    assert!(shift < 1e-8, "{shift:e}");
    assert!(full.rel_error < 0.02, "{full:?}");
}

#[test]
fn unreachable_crossings_are_reported() {
    let mut s = stepper(16, 9, 10.0, 1e-4);
    let err = measure_frequency(&mut s, 1, 1e-4, 3, 0.5, 1.0).unwrap_err();
    assert!(err.to_string().contains("did not converge"), "{err}");
}
