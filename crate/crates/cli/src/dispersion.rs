//! Linear capillary-wave experiment: the modal amplitude of a small single-mode
//! surface oscillates at `ω = √(σk³ tanh(kb))`.

use std::f64::consts::PI;

use fsbc::dynamics::{State, Stepper};
use fsbc::spectral::{Grid, SurfaceField, VectorField};
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;

/// Linearized capillary frequency on depth `b`.
pub fn capillary_frequency(sigma: f64, k: f64, b: f64) -> f64 {
    (sigma * k.powi(3) * (k * b).tanh()).sqrt()
}

/// `(2/N) Σ ψ cos(k x₁)`, the amplitude of the `cos(k x₁)` mode.
pub fn modal_amplitude(grid: &Grid, psi: &SurfaceField, k: i64) -> f64 {
    let basis = SurfaceField::from_fn(grid, |x, _| (k as f64 * x).cos());
    let n = psi.values().len() as f64;
    2.0 * psi.values().iter().zip(basis.values()).map(|(a, b)| a * b).sum::<f64>() / n
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionRow {
    pub k: i64,
    pub amplitude: f64,
    pub measured: f64,
    pub predicted: f64,
    pub rel_error: f64,
    pub crossings: Vec<f64>,
    pub steps: u64,
}

/// Step `ψ₀ = ε cos(k x₁)`, `v = 0` until `crossings` zero crossings of the modal
/// amplitude, then fit `t_n = (2n+1)π/(2ω)` through the origin by least squares.
/// Crossing times are linearly interpolated; the amplitude is odd about each
/// crossing, so the interpolation error is third order in the step.
pub fn measure_frequency(
    stepper: &mut Stepper,
    k: i64,
    amplitude: f64,
    crossings: usize,
    max_periods: f64,
    sigma: f64,
) -> Result<DispersionRow, CliError> {
    let grid = stepper.grid().clone();
    let predicted = capillary_frequency(sigma, k as f64, grid.depth());
    let psi0 = SurfaceField::from_fn(&grid, |x, _| amplitude * (k as f64 * x).cos());
    let mut state = State::new(0.0, VectorField::zeros(&grid), psi0);
    let t_max = max_periods * 2.0 * PI / predicted;
    let mut prev = (0.0, modal_amplitude(&grid, &state.psi, k));
    let mut found = Vec::with_capacity(crossings);
    let start = stepper.steps_taken();
    while found.len() < crossings {
        if state.t > t_max {
            return Err(CliError::Other(format!(
                "frequency fit for k = {k} did not converge: {} of {crossings} zero crossings by t = {t_max:.3}",
                found.len()
            )));
        }
        let dt = stepper.cfl(&state)?;
        state = stepper.rk4_step(&state, dt)?.0;
        let a = modal_amplitude(&grid, &state.psi, k);
        if prev.1 != 0.0 && (a == 0.0 || a.signum() != prev.1.signum()) {
            found.push(prev.0 + (state.t - prev.0) * prev.1 / (prev.1 - a));
        }
        prev = (state.t, a);
    }
    let (num, den) = found.iter().enumerate().fold((0.0, 0.0), |(n, d), (i, &t)| {
        let c = (2 * i + 1) as f64 * PI / 2.0;
        (n + c * c, d + c * t)
    });
    let measured = num / den;
    Ok(DispersionRow {
        k,
        amplitude,
        measured,
        predicted,
        rel_error: (measured - predicted).abs() / predicted,
        crossings: found,
        steps: stepper.steps_taken() - start,
    })
}

/// One row per configured mode.
pub fn cmd_dispersion(cfg: &Config) -> Result<Vec<DispersionRow>, CliError> {
    let d = &cfg.dispersion;
    let grid = cfg.grid()?;
    let mut rows = Vec::with_capacity(d.modes.len());
    for &k in &d.modes {
        if 2 * k as usize >= grid.nx() {
            return Err(CliError::Config {
                key: "dispersion.modes".into(),
                message: format!("mode {k} is not resolved on nx = {}", grid.nx()),
            });
        }
        let cutoff = cfg.check_surface(d.amplitude)?;
        let mut stepper = cfg.stepper(cutoff)?;
        rows.push(measure_frequency(&mut stepper, k, d.amplitude, d.crossings, d.max_periods, cfg.physics.sigma)?);
    }
    Ok(rows)
}

pub fn format_table(rows: &[DispersionRow]) -> String {
    let mut s = format!("{:>3} {:>12} {:>12} {:>12} {:>10}\n", "k", "omega", "predicted", "rel_error", "steps");
    for r in rows {
        s += &format!("{:>3} {:>12.6} {:>12.6} {:>12.3e} {:>10}\n", r.k, r.measured, r.predicted, r.rel_error, r.steps);
    }
    s
}
