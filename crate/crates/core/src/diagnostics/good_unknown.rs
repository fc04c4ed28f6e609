//! Evolution of the good unknowns `𝐕 = ∂̄^αv − ∂^φ₃v ∂̄^αφ`, `𝐐 = ∂̄^αq − ∂^φ₃q ∂̄^αφ`:
//! `D_t^φ𝐕 + ∂^φ𝐐 = −R³(v) − R²(q)`, checked on stored snapshots of a run.

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::operators::{
    advect_collocated, commutator, dalpha, dalpha_phi, dphi_i, good_unknown, l2, order, relative_flux, remainder_r2,
    triple_commutator, unit_subindex, MultiIndex,
};
use crate::spectral::{Grid, VectorField, VolumeField};

/// `R³(f) = D_t^φ(∂^φ₃f) ∂̄^αφ + R̃³(f)`, given `dt_d3f = D_t^φ∂^φ₃f` (which
/// needs time information the snapshot does not carry).
pub fn remainder_r3(
    grid: &Grid,
    f: &VolumeField,
    dt_d3f: &VolumeField,
    v: &VectorField,
    geom: &GeometrySnapshot,
    alpha: MultiIndex,
) -> VolumeField {
    let ap = unit_subindex(alpha);
    let rest = [alpha[0] - ap[0], alpha[1] - ap[1]];
    let d3f = grid.d3(f);
    let u = relative_flux(v, geom);
    let w = &u * &geom.inv_d3phi;
    let inv2 = &geom.inv_d3phi * &geom.inv_d3phi;

    let mut r = dt_d3f * &dalpha_phi(grid, geom, alpha);
    // [∂̄^α, v̄]·∂̄f
    let [d1f, d2f] = grid.grad_tan(f);
    r += &commutator(grid, alpha, &v.0[0], &d1f);
    r += &commutator(grid, alpha, &v.0[1], &d2f);
    // ∂^φ₃f [∂̄^α, v]·𝐍
    let mut cn = commutator(grid, alpha, &v.0[0], &geom.bf_n[0]);
    cn += &commutator(grid, alpha, &v.0[1], &geom.bf_n[1]);
    cn += &commutator(grid, alpha, &v.0[2], &geom.bf_n[2]);
    r += &(&(&geom.inv_d3phi * &d3f) * &cn);
    r += &triple_commutator(grid, alpha, &w, &d3f);
    r += &(&triple_commutator(grid, alpha, &u, &geom.inv_d3phi) * &d3f);
    let tail = commutator(grid, rest, &inv2, &dalpha(grid, geom.d3phi(), ap));
    r -= &(&(&u * &d3f) * &tail);
    r
}

/// Three-point derivative at the middle of a nonuniform stencil.
fn centered(t: [f64; 3], y: [&VolumeField; 3]) -> VolumeField {
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    let w0 = -h1 / (h0 * (h0 + h1));
    let w1 = (h1 - h0) / (h0 * h1);
    let w2 = h0 / (h1 * (h0 + h1));
    &(&(y[0] * w0) + &(y[1] * w1)) + &(y[2] * w2)
}

/// `L²` norm over components of `D_t^φ𝐕 + ∂^φ𝐐 + R³(v) + R²(q)` at the middle of
/// the last three snapshots; `q` is the pressure there. Time derivatives are
/// second-order centered differences, so on a smooth run the residual falls as `dt²`.
pub fn good_unknown_evolution_residual(
    grid: &Grid,
    states: &[State],
    geoms: &[GeometrySnapshot],
    q: &VolumeField,
    alpha: MultiIndex,
) -> Result<f64> {
    if states.len() < 3 || geoms.len() != states.len() {
        return Err(Error::Precondition(format!(
            "need at least 3 snapshots with matching geometries, got {} states and {} geometries",
            states.len(),
            geoms.len()
        )));
    }
    if order(alpha) != 3 {
        return Err(Error::InvalidArgument(format!("need |alpha| = 3, got {alpha:?}")));
    }
    let n = states.len();
    let (s, gm) = (&states[n - 3..], &geoms[n - 3..]);
    for g in gm {
        g.require_invertible()?;
    }
    let t = [s[0].t, s[1].t, s[2].t];
    if !(t[0] < t[1] && t[1] < t[2]) {
        return Err(Error::Precondition(format!("snapshot times must increase, got {t:?}")));
    }
    let (v, geom) = (&s[1].v, &gm[1]);
    let big_q = good_unknown(grid, q, geom, alpha);

    let mut total = 0.0;
    for i in 0..3 {
        let big_v: Vec<VolumeField> = (0..3).map(|k| good_unknown(grid, &s[k].v.0[i], &gm[k], alpha)).collect();
        let d3v: Vec<VolumeField> = (0..3).map(|k| dphi_i(grid, &s[k].v.0[i], &gm[k], 2)).collect();
        let dt_big_v = centered(t, [&big_v[0], &big_v[1], &big_v[2]]);
        let dt_d3v = centered(t, [&d3v[0], &d3v[1], &d3v[2]]);
        let mat_big_v = &dt_big_v + &advect_collocated(grid, v, &big_v[1], geom);
        let mat_d3v = &dt_d3v + &advect_collocated(grid, v, &d3v[1], geom);
        let mut res = &mat_big_v + &dphi_i(grid, &big_q, geom, i);
        res += &remainder_r3(grid, &v.0[i], &mat_d3v, v, geom, alpha);
        res += &remainder_r2(grid, q, geom, alpha, i);
        total += l2(grid, &res).powi(2);
    }
    Ok(total.sqrt())
}
