//! Empirical sides of the log-Lipschitz bound for the modified velocity and of
//! the div–curl estimates. Constants are unknown, so only ratios are reported.

use serde::{Deserialize, Serialize};

use crate::elliptic::{harmonic_extension, EllipticSolver};
use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::operators::{curl_phi, dalpha, div_phi, dot_surface, grad_flat, grad_phi, pull_back};
use crate::spectral::{boundary_sobolev_norm, interior_sobolev_norm, Grid, VectorField, VolumeField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerrariReport {
    /// `sup|V| + sup|∂^φV|` with the Frobenius norm on the gradient.
    pub lhs: f64,
    /// `(1 + log⁺‖ω^φ‖_{H²})‖ω^φ‖_∞ + 1`.
    pub rhs: f64,
    pub ratio: f64,
    /// `sup|V·N|` on the top boundary after the harmonic correction.
    pub normal_trace: f64,
}

/// `V = v − ∂^φξ`, with `ξ` harmonic and `N·∂^φξ = v·N − mean(v·N)` on top.
pub fn modified_velocity(solver: &EllipticSolver, v: &VectorField, geom: &GeometrySnapshot) -> Result<VectorField> {
    let g = solver.grid();
    let vn = dot_surface(&v.top(), &geom.n);
    let mean = vn.mean();
    let beta = g.without_nyquist(&vn.map(|x| x - mean));
    if beta.sup() == 0.0 {
        return Ok(v.clone());
    }
    let xi = harmonic_extension(solver, &beta, geom)?;
    Ok(v - &grad_phi(g, &xi.u, geom)?)
}

pub fn ferrari_check(solver: &EllipticSolver, v: &VectorField, geom: &GeometrySnapshot) -> Result<FerrariReport> {
    let g = solver.grid();
    let big_v = modified_velocity(solver, v, geom)?;
    let mut frob = VolumeField::constant_like(&v.0[0], 0.0);
    for c in &big_v.0 {
        for d in pull_back(geom, grad_flat(g, c)) {
            frob += &(&d * &d);
        }
    }
    let lhs = big_v.sup() + frob.map(f64::sqrt).sup();
    let omega = curl_phi(g, v, geom)?;
    let h2 = omega.0.iter().map(|c| interior_sobolev_norm(g, c, 2).powi(2)).sum::<f64>().sqrt();
    let log_plus = if h2 > 1.0 { h2.ln() } else { 0.0 };
    let rhs = (1.0 + log_plus) * omega.sup() + 1.0;
    let normal_trace = dot_surface(&big_v.top(), &geom.n).sup();
    Ok(FerrariReport { lhs, rhs, ratio: lhs / rhs, normal_trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HodgeVariant {
    /// `s = 3`, controlled by pure tangential derivatives.
    Interior,
    /// `s = 2`, controlled by the normal trace; needs `X·n = 0` at the bottom.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HodgeReport {
    pub s: u32,
    /// `‖X‖_s²`.
    pub lhs: f64,
    /// `‖∂^φ·X‖_{s−1}² + ‖∂^φ×X‖_{s−1}² + (tangential or trace term) + ‖X‖₀²`.
    pub rhs: f64,
    /// `lhs / rhs`, and 0 when both vanish.
    pub ratio: f64,
}

fn sobolev2(g: &Grid, x: &[VolumeField], s: u32) -> f64 {
    x.iter().map(|c| interior_sobolev_norm(g, c, s).powi(2)).sum()
}

/// Both sides of the div–curl estimate. The tangential term is `Σ_{|α|=s} ‖∂̄^αX‖₀²`.
pub fn hodge_check(grid: &Grid, x: &VectorField, geom: &GeometrySnapshot, variant: HodgeVariant) -> Result<HodgeReport> {
    let s = match variant {
        HodgeVariant::Interior => 3,
        HodgeVariant::Boundary => 2,
    };
    if variant == HodgeVariant::Boundary {
        let flux = x.0[2].bottom().sup();
        if flux > 1e-10 * x.sup() {
            return Err(Error::Precondition(format!("boundary variant needs X·n = 0 at the bottom, got {flux:.3e}")));
        }
    }
    let lhs = sobolev2(grid, &x.0, s);
    let div = div_phi(grid, x, geom)?;
    let curl = curl_phi(grid, x, geom)?;
    let mut rhs = sobolev2(grid, std::slice::from_ref(&div), s - 1) + sobolev2(grid, &curl.0, s - 1) + sobolev2(grid, &x.0, 0);
    rhs += match variant {
        HodgeVariant::Interior => (0..=s)
            .map(|a| sobolev2(grid, &x.0.clone().map(|c| dalpha(grid, &c, [a, s - a])), 0))
            .sum::<f64>(),
        HodgeVariant::Boundary => {
            boundary_sobolev_norm(grid, &dot_surface(&x.top(), &geom.n), s as f64 - 0.5).powi(2)
        }
    };
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(HodgeReport { s, lhs, rhs, ratio })
}
