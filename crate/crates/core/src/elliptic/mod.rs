//! Variable-coefficient elliptic problems on the flattened slab.
//!
//! Every problem is `Δ^φu = s` in the interior, a Dirichlet or flux condition on
//! top and `∂₃u = h_b` at the bottom, discretized by collocation (no
//! dealiasing) and solved by GMRES preconditioned with the exact flat operator.
//! Nyquist modes are excluded from the solution space.

mod flat;
mod gmres;

pub use flat::{FlatInverse, Gauge, TopRow};
pub use gmres::{gmres, GmresOutcome};

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::operators::{dot_surface, grad_phi, laplace_phi_collocated, pull_back};
use crate::spectral::{Grid, GridData, SurfaceField, VectorField, VolumeField};

/// Iteration controls shared by every solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative (preconditioned) residual target.
    pub tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    /// Largest admissible flux-shift constant of a pure Neumann problem,
    /// relative to the size of the data.
    pub compat_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 500, restart: 50, compat_tol: 1e-4 }
    }
}

/// Top boundary data.
#[derive(Debug, Clone)]
pub enum TopData {
    Dirichlet(SurfaceField),
    /// `N·∂^φu = flux`, constant fixed by `gauge(u) = value`.
    Neumann { flux: SurfaceField, gauge: Gauge, value: f64 },
}

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub source: VolumeField,
    pub top: TopData,
    /// `∂₃u` at the bottom; zero when absent.
    pub bottom_flux: Option<SurfaceField>,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: VolumeField,
    pub iterations: usize,
    /// Relative RMS residual of the discrete equations.
    pub residual: f64,
    /// Constant shift of the top flux needed for solvability (Neumann only).
    pub defect: f64,
}

/// Pressure and solve metadata.
#[derive(Debug, Clone)]
pub struct PressureSolution {
    pub q: VolumeField,
    pub variant: TopRow,
    pub residual: f64,
    pub iterations: usize,
    pub defect: f64,
}

/// Solver with flat-operator factorizations cached for one grid.
pub struct EllipticSolver {
    grid: Grid,
    settings: SolverSettings,
    dirichlet: FlatInverse,
    neumann: FlatInverse,
}

impl EllipticSolver {
    pub fn new(grid: &Grid, settings: SolverSettings) -> Self {
        Self {
            grid: grid.clone(),
            settings,
            dirichlet: FlatInverse::new(grid, TopRow::Dirichlet),
            neumann: FlatInverse::new(grid, TopRow::Neumann),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Discrete operator: `Δ^φu` in interior rows, the top condition in row 0,
    /// `∂₃u` in the bottom row.
    pub fn apply_operator(&self, geom: &GeometrySnapshot, top: TopRow, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (m, nz) = (g.surface_len(), g.nz());
        let uf = VolumeField::from_values(g, u.to_vec()).expect("volume length");
        let mut out = laplace_phi_collocated(g, &uf, geom).into_values();
        let d3 = g.d3(&uf);
        match top {
            TopRow::Dirichlet => out[..m].copy_from_slice(&u[..m]),
            TopRow::Neumann => out[..m].copy_from_slice(normal_flux_top(g, &uf, &d3, geom).values()),
        }
        out[(nz - 1) * m..].copy_from_slice(&d3.values()[(nz - 1) * m..]);
        out
    }

    pub fn solve(&self, geom: &GeometrySnapshot, problem: &EllipticProblem) -> Result<EllipticSolution> {
        geom.require_invertible()?;
        let g = &self.grid;
        let (m, nz, n) = (g.surface_len(), g.nz(), g.volume_len());
        problem.source.check_shape(g)?;
        let mut rhs = problem.source.values().to_vec();
        let (top_row, top_vals) = match &problem.top {
            TopData::Dirichlet(d) => (TopRow::Dirichlet, d),
            TopData::Neumann { flux, .. } => (TopRow::Neumann, flux),
        };
        top_vals.check_shape(g)?;
        rhs[..m].copy_from_slice(top_vals.values());
        match &problem.bottom_flux {
            Some(h) => {
                h.check_shape(g)?;
                rhs[(nz - 1) * m..].copy_from_slice(h.values());
            }
            None => rhs[(nz - 1) * m..].iter_mut().for_each(|x| *x = 0.0),
        }
        let rhs = g.remove_nyquist(&rhs);
        let s = &self.settings;

        match &problem.top {
            TopData::Dirichlet(_) => {
                let apply = |u: &[f64]| self.apply_operator(geom, TopRow::Dirichlet, u);
                let precond = |r: &[f64]| self.dirichlet.apply(r, None);
                let mut x = vec![0.0; n];
                let out = gmres(apply, precond, &rhs, &mut x, s.tol, s.restart, s.max_iters)?;
                let residual = relative_residual(&rhs, &g.remove_nyquist(&apply(&x)));
                Ok(EllipticSolution {
                    u: VolumeField::from_values(g, x)?,
                    iterations: out.iterations,
                    residual,
                    defect: 0.0,
                })
            }
            TopData::Neumann { flux, gauge, value } => {
                let gauge = *gauge;
                let gauge_of = |u: &[f64]| -> f64 {
                    match gauge {
                        Gauge::TopMean => u[..m].iter().sum::<f64>() / m as f64,
                        Gauge::VolumeMean => g.integrate_volume(u) / (g.surface_weight() * m as f64 * g.depth()),
                    }
                };
                let apply = |uc: &[f64]| -> Vec<f64> {
                    let (u, c) = (&uc[..n], uc[n]);
                    let mut out = self.apply_operator(geom, top_row, u);
                    out[..m].iter_mut().for_each(|x| *x -= c);
                    out.push(gauge_of(u));
                    out
                };
                let precond = |r: &[f64]| -> Vec<f64> {
                    let mut border = r[n];
                    let mut u = self.neumann.apply(&r[..n], Some((gauge, &mut border)));
                    u.push(border);
                    u
                };
                let mut b = rhs.clone();
                b.push(*value);
                let mut x = vec![0.0; n + 1];
                let out = gmres(apply, precond, &b, &mut x, s.tol, s.restart, s.max_iters)?;
                let mut ax = apply(&x);
                let last = ax.pop().expect("gauge row");
                let mut proj = g.remove_nyquist(&ax);
                proj.push(last);
                let residual = relative_residual(&b, &proj);
                let defect = x.pop().expect("border unknown");
                let bottom = problem.bottom_flux.as_ref().map_or(0.0, |h| h.sup());
                let scale = flux.sup().max(bottom).max(problem.source.sup() * g.depth());
                if defect.abs() > s.compat_tol * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::IncompatibleNeumann { defect, tolerance: s.compat_tol * scale });
                }
                Ok(EllipticSolution {
                    u: VolumeField::from_values(g, x)?,
                    iterations: out.iterations,
                    residual,
                    defect,
                })
            }
        }
    }
}

fn relative_residual(b: &[f64], ax: &[f64]) -> f64 {
    let bn: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rn: f64 = b.iter().zip(ax).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

/// `N·∂^φu = |N|²∂₃u − ∂̄ψ·∂̄u` on the top boundary (where `∂₃φ = 1`).
pub fn normal_flux_top(grid: &Grid, u: &VolumeField, d3u: &VolumeField, geom: &GeometrySnapshot) -> SurfaceField {
    let top = u.top();
    let [u1, u2] = grid.grad_tan(&top);
    let n2 = geom.norm_n.map(|x| x * x);
    &(&n2 * &d3u.top()) - &(&(&geom.dpsi[0] * &u1) + &(&geom.dpsi[1] * &u2))
}

/// `−(∂^φv)ᵀ : (∂^φv)`, dealiased.
pub fn pressure_source(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot) -> VolumeField {
    let gr: Vec<[VolumeField; 3]> = v.0.iter().map(|c| pull_back(geom, crate::operators::grad_flat(grid, c))).collect();
    // gr[j][i] = ∂^φ_i v_j
    let mut s = VolumeField::constant_like(&v.0[0], 0.0);
    for i in 0..3 {
        for j in 0..3 {
            s -= &(&gr[j][i] * &gr[i][j]);
        }
    }
    grid.dealiased(&s)
}

/// Top flux data `−(v̄·∂̄v)·N − ψ_tt − v̄·∂̄(v·N)` for the Neumann pressure problem.
pub fn neumann_pressure_flux(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot, psi_tt: &SurfaceField) -> SurfaceField {
    let top = v.top();
    let adv: [SurfaceField; 3] = std::array::from_fn(|c| {
        let [a, b] = grid.grad_tan(&top[c]);
        &(&top[0] * &a) + &(&top[1] * &b)
    });
    let vn = dot_surface(&top, &geom.n);
    let [w1, w2] = grid.grad_tan(&vn);
    let trans = &(&top[0] * &w1) + &(&top[1] * &w2);
    let f = &(&(-&dot_surface(&adv, &geom.n)) - psi_tt) - &trans;
    grid.dealiased(&f)
}

/// Pressure with `q = σℋ` on top, `∂₃q = 0` at the bottom.
pub fn solve_pressure_dirichlet(
    solver: &EllipticSolver,
    v: &VectorField,
    geom: &GeometrySnapshot,
    sigma: f64,
) -> Result<PressureSolution> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("surface tension must be positive, got {sigma}")));
    }
    let g = solver.grid();
    let problem = EllipticProblem {
        source: pressure_source(g, v, geom),
        top: TopData::Dirichlet(&geom.h * sigma),
        bottom_flux: None,
    };
    let sol = solver.solve(geom, &problem)?;
    let mut q = sol.u;
    // the trace is imposed nodally
    q.set_level(0, &(&geom.h * sigma));
    Ok(PressureSolution { q, variant: TopRow::Dirichlet, residual: sol.residual, iterations: sol.iterations, defect: 0.0 })
}

/// Pressure with the flux condition derived from the momentum equation on top;
/// the constant is fixed by `mean_top(q) = mean_top(σℋ)`.
pub fn solve_pressure_neumann(
    solver: &EllipticSolver,
    v: &VectorField,
    geom: &GeometrySnapshot,
    sigma: f64,
    psi_tt: &SurfaceField,
) -> Result<PressureSolution> {
    let g = solver.grid();
    let problem = EllipticProblem {
        source: pressure_source(g, v, geom),
        top: TopData::Neumann {
            flux: neumann_pressure_flux(g, v, geom, psi_tt),
            gauge: Gauge::TopMean,
            value: sigma * geom.h.mean(),
        },
        bottom_flux: None,
    };
    let sol = solver.solve(geom, &problem)?;
    Ok(PressureSolution {
        q: sol.u,
        variant: TopRow::Neumann,
        residual: sol.residual,
        iterations: sol.iterations,
        defect: sol.defect,
    })
}

/// `Δ^φξ = 0`, `N·∂^φξ = β` on top, `∂₃ξ = 0` at the bottom, zero volume mean.
pub fn harmonic_extension(solver: &EllipticSolver, beta: &SurfaceField, geom: &GeometrySnapshot) -> Result<EllipticSolution> {
    let mean = beta.mean();
    if mean.abs() > 1e-10 * beta.sup().max(1e-300) {
        return Err(Error::Precondition(format!("flux data must have zero mean, got {mean:.3e}")));
    }
    let g = solver.grid();
    solver.solve(
        geom,
        &EllipticProblem {
            source: VolumeField::zeros(g),
            top: TopData::Neumann { flux: beta.clone(), gauge: Gauge::VolumeMean, value: 0.0 },
            bottom_flux: None,
        },
    )
}

/// Result of a divergence-cleaning projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub v: VectorField,
    pub iterations: usize,
    pub residual: f64,
}

/// Bottom data `∂₃λ = ∂₃φ v₃` so that `v − ∂^φλ` has zero bottom flux; `None`
/// when `v` is already tangent there.
fn bottom_flux_data(v: &VectorField, geom: &GeometrySnapshot) -> Option<SurfaceField> {
    let flux = &v.0[2].bottom() * &geom.d3phi().bottom();
    (flux.sup() > 0.0).then_some(flux)
}

/// `v − ∂^φλ` with `Δ^φλ = ∂^φ·v` and `λ = 0` on top. At the bottom `∂₃λ = 0`
/// for tangent input; otherwise the bottom flux of `v` is removed as well.
pub fn project_divergence_free(solver: &EllipticSolver, v: &VectorField, geom: &GeometrySnapshot) -> Result<Projection> {
    let g = solver.grid();
    let div = crate::operators::div_phi(g, v, geom)?;
    let sol = solver.solve(
        geom,
        &EllipticProblem {
            source: div,
            top: TopData::Dirichlet(SurfaceField::zeros(g)),
            bottom_flux: bottom_flux_data(v, geom),
        },
    )?;
    let grad = grad_phi(g, &sol.u, geom)?;
    Ok(Projection { v: v - &grad, iterations: sol.iterations, residual: sol.residual })
}

/// Projection for a rigid lid: additionally removes the normal flux through the
/// top, `N·∂^φλ = v·N`, so the result satisfies `v·N = 0` there.
pub fn project_with_lid(solver: &EllipticSolver, v: &VectorField, geom: &GeometrySnapshot) -> Result<Projection> {
    let g = solver.grid();
    let div = crate::operators::div_phi(g, v, geom)?;
    let flux = dot_surface(&v.top(), &geom.n);
    let sol = solver.solve(
        geom,
        &EllipticProblem {
            source: div,
            top: TopData::Neumann { flux, gauge: Gauge::VolumeMean, value: 0.0 },
            bottom_flux: bottom_flux_data(v, geom),
        },
    )?;
    let grad = grad_phi(g, &sol.u, geom)?;
    Ok(Projection { v: v - &grad, iterations: sol.iterations, residual: sol.residual })
}
