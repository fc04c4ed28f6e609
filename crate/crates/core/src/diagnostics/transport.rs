//! Transport and integration-by-parts identities on the flattened slab. Every
//! identity is evaluated with both sides assembled independently by quadrature;
//! time derivatives are inputs, so the checks apply at a single instant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::operators::{advect_collocated, div_phi, dot_surface, dphi_i};
use crate::spectral::{Grid, SurfaceField, VectorField, VolumeField};

/// Instantaneous data for the identities. `geom` must carry `ψ_t` (and hence
/// `∂_tφ = χψ_t`) consistent with the time derivatives `f_t`, `g_t`.
#[derive(Debug, Clone)]
pub struct TransportInputs<'a> {
    pub f: &'a VolumeField,
    pub g: &'a VolumeField,
    pub f_t: &'a VolumeField,
    pub g_t: &'a VolumeField,
    pub v: &'a VectorField,
    pub geom: &'a GeometrySnapshot,
    /// Absolute tolerance for the preconditions on `g`, `v` and `ψ_t`.
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityResidual {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, residual: (lhs - rhs).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportResiduals {
    pub a1: IdentityResidual,
    /// Tangential integration by parts, `i = 1, 2`.
    pub a2: [IdentityResidual; 2],
    /// Vertical integration by parts.
    pub a2_1: IdentityResidual,
    pub a3: IdentityResidual,
    pub a4: IdentityResidual,
}

impl TransportResiduals {
    pub fn max(&self) -> f64 {
        [self.a1, self.a2[0], self.a2[1], self.a2_1, self.a3, self.a4]
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

fn weighted(grid: &Grid, a: &VolumeField, b: &VolumeField, geom: &GeometrySnapshot) -> f64 {
    grid.integrate_vol(&(&(a * b) * geom.d3phi()))
}

/// `∂_t^φ f = ∂_t f − (∂_tφ/∂₃φ)∂₃f`.
fn dt_phi_of(grid: &Grid, f: &VolumeField, f_t: &VolumeField, geom: &GeometrySnapshot) -> VolumeField {
    f_t - &(&(&geom.dt_phi * &geom.inv_d3phi) * &grid.d3(f))
}

/// `D_t^φ f = ∂_t f + v̄·∂̄f + (v·𝐍 − ∂_tφ)/∂₃φ ∂₃f`.
fn material(grid: &Grid, f: &VolumeField, f_t: &VolumeField, v: &VectorField, geom: &GeometrySnapshot) -> VolumeField {
    f_t + &advect_collocated(grid, v, f, geom)
}

/// `d/dt ∫ fg∂₃φ` by the product rule, with `∂_t∂₃φ = χ'ψ_t`.
fn time_derivative_of_weighted(grid: &Grid, inp: &TransportInputs) -> f64 {
    let geom = inp.geom;
    let prod_t = &(inp.f_t * inp.g) + &(inp.f * inp.g_t);
    let d3phi_t = VolumeField::outer(&geom.cutoff.chi1, &geom.psi_t);
    grid.integrate_vol(&(&prod_t * geom.d3phi())) + grid.integrate_vol(&(&(inp.f * inp.g) * &d3phi_t))
}

/// `d/dt∫fg∂₃φ = ∫(∂_t^φf)g∂₃φ + ∫f(∂_t^φg)∂₃φ + ∫_top fgψ_t`.
pub fn identity_a1(grid: &Grid, inp: &TransportInputs) -> Result<IdentityResidual> {
    inp.geom.require_invertible()?;
    let geom = inp.geom;
    let lhs = time_derivative_of_weighted(grid, inp);
    let rhs = weighted(grid, &dt_phi_of(grid, inp.f, inp.f_t, geom), inp.g, geom)
        + weighted(grid, inp.f, &dt_phi_of(grid, inp.g, inp.g_t, geom), geom)
        + grid.integrate(&(&(&inp.f.top() * &inp.g.top()) * &geom.psi_t));
    Ok(IdentityResidual::new(lhs, rhs))
}

/// `∫(∂^φ_i f)g∂₃φ = −∫f(∂^φ_i g)∂₃φ + ∫_top fgNᵢ` for `i ∈ {0, 1}`.
pub fn identity_a2(grid: &Grid, inp: &TransportInputs, i: usize) -> Result<IdentityResidual> {
    if i > 1 {
        return Err(Error::InvalidArgument(format!("tangential index must be 0 or 1, got {i}")));
    }
    inp.geom.require_invertible()?;
    let geom = inp.geom;
    let lhs = weighted(grid, &dphi_i(grid, inp.f, geom, i), inp.g, geom);
    let rhs = -weighted(grid, inp.f, &dphi_i(grid, inp.g, geom, i), geom)
        + grid.integrate(&(&(&inp.f.top() * &inp.g.top()) * &geom.n[i]));
    Ok(IdentityResidual::new(lhs, rhs))
}

/// `∫(∂^φ₃f)g∂₃φ = −∫f(∂^φ₃g)∂₃φ + ∫_top fg`, for `g = 0` at the bottom.
pub fn identity_a2_1(grid: &Grid, inp: &TransportInputs) -> Result<IdentityResidual> {
    let gb = inp.g.bottom().sup();
    if gb > inp.tol {
        return Err(Error::Precondition(format!("g must vanish at the bottom, sup = {gb:.3e}")));
    }
    inp.geom.require_invertible()?;
    let geom = inp.geom;
    let lhs = weighted(grid, &dphi_i(grid, inp.f, geom, 2), inp.g, geom);
    let rhs = -weighted(grid, inp.f, &dphi_i(grid, inp.g, geom, 2), geom) + grid.integrate(&(&inp.f.top() * &inp.g.top()));
    Ok(IdentityResidual::new(lhs, rhs))
}

/// `∂^φ·v = 0`, `ψ_t = v·N` on top and `v₃ = 0` at the bottom, within `tol`.
fn check_transport_preconditions(grid: &Grid, inp: &TransportInputs) -> Result<()> {
    let geom = inp.geom;
    let div = div_phi(grid, inp.v, geom)?.sup();
    let kin = (&dot_surface(&inp.v.top(), &geom.n) - &geom.psi_t).sup();
    let btm = inp.v.0[2].bottom().sup();
    for (name, val) in [("div_phi v", div), ("psi_t - v.N", kin), ("bottom v3", btm)] {
        if val > inp.tol {
            return Err(Error::Precondition(format!("{name} = {val:.3e} exceeds {:.1e}", inp.tol)));
        }
    }
    Ok(())
}

/// `½ d/dt∫|f|²∂₃φ = ∫(D_t^φf)f∂₃φ`.
pub fn identity_a3(grid: &Grid, inp: &TransportInputs) -> Result<IdentityResidual> {
    check_transport_preconditions(grid, inp)?;
    let geom = inp.geom;
    let same = TransportInputs { g: inp.f, g_t: inp.f_t, ..inp.clone() };
    let lhs = 0.5 * time_derivative_of_weighted(grid, &same);
    let rhs = weighted(grid, &material(grid, inp.f, inp.f_t, inp.v, geom), inp.f, geom);
    Ok(IdentityResidual::new(lhs, rhs))
}

/// `d/dt∫fg∂₃φ = ∫(D_t^φf)g∂₃φ + ∫f(D_t^φg)∂₃φ`.
pub fn identity_a4(grid: &Grid, inp: &TransportInputs) -> Result<IdentityResidual> {
    check_transport_preconditions(grid, inp)?;
    let geom = inp.geom;
    let lhs = time_derivative_of_weighted(grid, inp);
    let rhs = weighted(grid, &material(grid, inp.f, inp.f_t, inp.v, geom), inp.g, geom)
        + weighted(grid, inp.f, &material(grid, inp.g, inp.g_t, inp.v, geom), geom);
    Ok(IdentityResidual::new(lhs, rhs))
}

/// All five identities; fails on the first violated precondition.
pub fn transport_identity_suite(grid: &Grid, inp: &TransportInputs) -> Result<TransportResiduals> {
    Ok(TransportResiduals {
        a1: identity_a1(grid, inp)?,
        a2: [identity_a2(grid, inp, 0)?, identity_a2(grid, inp, 1)?],
        a2_1: identity_a2_1(grid, inp)?,
        a3: identity_a3(grid, inp)?,
        a4: identity_a4(grid, inp)?,
    })
}

/// `ψ_t := v·N`, the kinematic choice that makes `v` admissible for the transport identities.
pub fn kinematic_psi_t(v: &VectorField, geom: &GeometrySnapshot) -> SurfaceField {
    dot_surface(&v.top(), &geom.n)
}
