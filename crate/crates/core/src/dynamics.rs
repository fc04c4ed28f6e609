//! Time evolution of `(v, ψ)`: stage right-hand sides, the capillary CFL
//! limit and classical RK4 with periodic divergence cleaning.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::elliptic::{
    project_divergence_free, project_with_lid, solve_pressure_dirichlet, solve_pressure_neumann, EllipticSolver,
    PressureSolution, SolverSettings,
};
use crate::error::{BreakdownCondition, Error, Result};
use crate::geometry::{CutoffProfile, GeometrySnapshot};
use crate::operators::{advect, div_phi, dot_surface, grad_phi, l2, l2_surface, relative_flux};
use crate::spectral::{Grid, SurfaceField, VectorField};

/// Fluid state on the flattened slab.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub v: VectorField,
    pub psi: SurfaceField,
}

impl State {
    pub fn new(t: f64, v: VectorField, psi: SurfaceField) -> Self {
        Self { t, v, psi }
    }
}

/// What one step did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub dt: f64,
    /// GMRES iterations summed over the four stage pressure solves.
    pub pressure_iterations: usize,
    /// `‖∂^φ·v‖₀` after the step.
    pub divergence_norm: f64,
    /// `‖v₃‖` on the bottom after the step.
    pub bottom_flux_norm: f64,
    pub projected: bool,
}

/// Stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub sigma: f64,
    /// Fraction of the CFL limit in `(0, 1]`.
    pub safety: f64,
    /// Project every `n` steps; `0` disables cleaning.
    pub projection_cadence: usize,
    /// Halt threshold for `min ∂₃φ` and `b − sup|ψ|`.
    pub eps_geo: f64,
    /// Rigid lid: `ψ_t ≡ 0`, `v·N = 0` imposed on top.
    pub fixed_lid: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { sigma: 1.0, safety: 0.5, projection_cadence: 1, eps_geo: 1e-3, fixed_lid: false }
    }
}

/// `ψ_t = v·N` on top, dealiased.
pub fn compute_psi_t(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot) -> SurfaceField {
    grid.dealiased(&dot_surface(&v.top(), &geom.n))
}

/// `∂_t v = −v̄·∂̄v − (v·𝐍 − ∂_tφ)/∂₃φ ∂₃v − ∂^φq`, dealiased.
///
/// `geom` must carry the `∂_tφ` built from the same state's `ψ_t`.
pub fn compute_dt_v(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot, q: &PressureSolution) -> Result<VectorField> {
    let gq = grad_phi(grid, &q.q, geom)?;
    let mut out = VectorField::zeros(grid);
    for c in 0..3 {
        let a = advect(grid, v, &v.0[c], geom)?;
        out.0[c] = -&(&a + &grid.dealiased(&gq.0[c]));
    }
    Ok(out)
}

/// `ψ_tt = (∂_t v)·N − v̄·∂̄ψ_t` on top, dealiased.
pub fn compute_psi_tt(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot, dt_v: &VectorField) -> SurfaceField {
    let top = v.top();
    let [p1, p2] = grid.grad_tan(&geom.psi_t);
    let transport = &(&top[0] * &p1) + &(&top[1] * &p2);
    grid.dealiased(&(&dot_surface(&dt_v.top(), &geom.n) - &transport))
}

/// `safety · min(Δx^{3/2}/√(σπ), Δx/(‖v‖∞+ε), Δz_min/(w∞+ε))` with `w` the vertical transport speed.
pub fn cfl_dt(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot, sigma: f64, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidArgument(format!("CFL safety must lie in (0, 1], got {safety}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("surface tension must be positive, got {sigma}")));
    }
    const EPS: f64 = 1e-12;
    let dx = grid.dx();
    let capillary = dx.powf(1.5) / (sigma * std::f64::consts::PI).sqrt();
    let horizontal = dx / (v.0[0].sup().max(v.0[1].sup()) + EPS);
    let w = (&relative_flux(v, geom) * &geom.inv_d3phi).sup();
    let vertical = grid.dz_min() / (w + EPS);
    Ok(safety * capillary.min(horizontal).min(vertical))
}

/// Quantities evaluated at one state: geometry with `∂_tφ`, pressure, `∂_t v`, `ψ_tt`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub geom: GeometrySnapshot,
    pub psi_t: SurfaceField,
    pub pressure: PressureSolution,
    pub dt_v: VectorField,
    pub psi_tt: SurfaceField,
}

/// RK4 driver owning the solver workspace and the step counter.
pub struct Stepper {
    grid: Grid,
    cutoff: CutoffProfile,
    solver: EllipticSolver,
    cfg: DynamicsConfig,
    steps: u64,
}

impl Stepper {
    pub fn new(grid: &Grid, cutoff: CutoffProfile, settings: SolverSettings, cfg: DynamicsConfig) -> Result<Self> {
        if !(cfg.sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("surface tension must be positive, got {}", cfg.sigma)));
        }
        if !(cfg.eps_geo > 0.0) {
            return Err(Error::InvalidArgument(format!("eps_geo must be positive, got {}", cfg.eps_geo)));
        }
        Ok(Self { grid: grid.clone(), cutoff, solver: EllipticSolver::new(grid, settings), cfg, steps: 0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn solver(&self) -> &EllipticSolver {
        &self.solver
    }

    pub fn cutoff(&self) -> &CutoffProfile {
        &self.cutoff
    }

    pub fn config(&self) -> &DynamicsConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Continue a run from a saved step count (restart from a snapshot).
    pub fn set_steps_taken(&mut self, steps: u64) {
        self.steps = steps;
    }

    /// Geometry of `ψ` with `∂_tφ` rebuilt from this state's `ψ_t`; halts on degeneracy.
    pub fn geometry(&self, v: &VectorField, psi: &SurfaceField) -> Result<(GeometrySnapshot, SurfaceField)> {
        let g = &self.grid;
        let base = GeometrySnapshot::lift(g, psi, &SurfaceField::zeros(g), &self.cutoff);
        let eps = self.cfg.eps_geo;
        if !(base.min_d3phi > eps) {
            return Err(Error::Halt {
                condition: BreakdownCondition::Geometry,
                reason: format!("min d3phi = {:.3e} <= eps_geo = {eps:.1e}", base.min_d3phi),
            });
        }
        if !(base.depth_margin > eps) {
            return Err(Error::Halt {
                condition: BreakdownCondition::Geometry,
                reason: format!("depth margin b - sup|psi| = {:.3e} <= eps_geo = {eps:.1e}", base.depth_margin),
            });
        }
        let psi_t = if self.cfg.fixed_lid { SurfaceField::zeros(g) } else { compute_psi_t(g, v, &base) };
        Ok((base.with_psi_t(&psi_t), psi_t))
    }

    fn pressure(&self, v: &VectorField, geom: &GeometrySnapshot) -> Result<PressureSolution> {
        if self.cfg.fixed_lid {
            // rigid lid: flux data with ψ_tt = 0
            solve_pressure_neumann(&self.solver, v, geom, self.cfg.sigma, &SurfaceField::zeros(&self.grid))
        } else {
            solve_pressure_dirichlet(&self.solver, v, geom, self.cfg.sigma)
        }
    }

    /// Full evaluation of the right-hand side at `(v, ψ)`.
    pub fn evaluate(&self, v: &VectorField, psi: &SurfaceField) -> Result<Evaluation> {
        let (geom, psi_t) = self.geometry(v, psi)?;
        let pressure = self.pressure(v, &geom)?;
        let dt_v = compute_dt_v(&self.grid, v, &geom, &pressure)?;
        let psi_tt = if self.cfg.fixed_lid {
            SurfaceField::zeros(&self.grid)
        } else {
            compute_psi_tt(&self.grid, v, &geom, &dt_v)
        };
        Ok(Evaluation { geom, psi_t, pressure, dt_v, psi_tt })
    }

    fn stage(&self, v: &VectorField, psi: &SurfaceField) -> Result<(VectorField, SurfaceField, usize)> {
        let (geom, psi_t) = self.geometry(v, psi)?;
        let pressure = self.pressure(v, &geom)?;
        let dt_v = compute_dt_v(&self.grid, v, &geom, &pressure)?;
        Ok((dt_v, psi_t, pressure.iterations))
    }

    /// CFL step for the current state.
    pub fn cfl(&self, state: &State) -> Result<f64> {
        let (geom, _) = self.geometry(&state.v, &state.psi)?;
        cfl_dt(&self.grid, &state.v, &geom, self.cfg.sigma, self.cfg.safety)
    }

    /// Project the velocity for the current geometry (lid variant in fixed-lid mode).
    pub fn project(&self, v: &VectorField, psi: &SurfaceField) -> Result<VectorField> {
        let (geom, _) = self.geometry(v, psi)?;
        let p = if self.cfg.fixed_lid {
            project_with_lid(&self.solver, v, &geom)?
        } else {
            project_divergence_free(&self.solver, v, &geom)?
        };
        Ok(p.v)
    }

    /// One classical RK4 step of size `dt`, followed by cleaning on the configured cadence.
    pub fn rk4_step(&mut self, state: &State, dt: f64) -> Result<(State, StepReport)> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let (v0, p0) = (&state.v, &state.psi);
        let axpy = |v: &VectorField, p: &SurfaceField, kv: &VectorField, kp: &SurfaceField, h: f64| {
            (v + &kv.scale(h), p + &(kp * h))
        };

        let (k1v, k1p, i1) = self.stage(v0, p0)?;
        let (v1, p1) = axpy(v0, p0, &k1v, &k1p, 0.5 * dt);
        let (k2v, k2p, i2) = self.stage(&v1, &p1)?;
        let (v2, p2) = axpy(v0, p0, &k2v, &k2p, 0.5 * dt);
        let (k3v, k3p, i3) = self.stage(&v2, &p2)?;
        let (v3, p3) = axpy(v0, p0, &k3v, &k3p, dt);
        let (k4v, k4p, i4) = self.stage(&v3, &p3)?;

        let w = dt / 6.0;
        let kv = &(&(&k1v + &k2v.scale(2.0)) + &k3v.scale(2.0)) + &k4v;
        let kp = &(&(&k1p + &(&k2p * 2.0)) + &(&k3p * 2.0)) + &k4p;
        let mut v = v0 + &kv.scale(w);
        let psi = if self.cfg.fixed_lid { p0.clone() } else { p0 + &(&kp * w) };
        if !v.is_finite() || psi.values().iter().any(|x| !x.is_finite()) {
            return Err(Error::Halt {
                condition: BreakdownCondition::ControlNorms,
                reason: format!("non-finite state after step at t = {:.6e}", state.t + dt),
            });
        }

        self.steps += 1;
        let cadence = self.cfg.projection_cadence as u64;
        let projected = cadence > 0 && self.steps.is_multiple_of(cadence);
        if projected {
            v = self.project(&v, &psi)?;
        }
        let (geom, _) = self.geometry(&v, &psi)?;
        let report = StepReport {
            dt,
            pressure_iterations: i1 + i2 + i3 + i4,
            divergence_norm: l2(&self.grid, &div_phi(&self.grid, &v, &geom)?),
            bottom_flux_norm: l2_surface(&self.grid, &v.0[2].bottom()),
            projected,
        };
        debug!("step {} t = {:.6e} dt = {dt:.3e} div = {:.3e}", self.steps, state.t + dt, report.divergence_norm);
        Ok((State::new(state.t + dt, v, psi), report))
    }
}
