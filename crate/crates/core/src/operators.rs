//! Flattened differential calculus `∂^φ`, good unknowns and commutator identities.
//!
//! The basic operators (`grad_phi`, `div_phi`, `curl_phi`) are pure collocation:
//! pointwise products are not dealiased, so discrete identities such as
//! `div_phi ∘ grad_phi` agree exactly with the elliptic operator. The
//! composite operators used in the evolution (`laplace_phi`, `advect`) dealias.

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::spectral::{Grid, SurfaceField, VectorField, VolumeField};

/// Tangential multi-index `(α₁, α₂)` for `∂̄^α = ∂₁^{α₁} ∂₂^{α₂}`.
pub type MultiIndex = [u32; 2];

pub fn order(alpha: MultiIndex) -> u32 {
    alpha[0] + alpha[1]
}

/// `C_α^β = C(α₁, β₁) C(α₂, β₂)`.
pub fn multi_binomial(alpha: MultiIndex, beta: MultiIndex) -> f64 {
    binomial(alpha[0], beta[0]) * binomial(alpha[1], beta[1])
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `β ≤ α` componentwise.
pub fn sub_indices(alpha: MultiIndex) -> impl Iterator<Item = MultiIndex> {
    (0..=alpha[0]).flat_map(move |a| (0..=alpha[1]).map(move |b| [a, b]))
}

/// The unit index `α' ≤ α` used to split `∂̄^α = ∂̄^{α−α'} ∂̄^{α'}`.
pub fn unit_subindex(alpha: MultiIndex) -> MultiIndex {
    if alpha[0] > 0 {
        [1, 0]
    } else {
        [0, 1]
    }
}

fn minus(a: MultiIndex, b: MultiIndex) -> MultiIndex {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dalpha<F: crate::spectral::GridData>(grid: &Grid, f: &F, alpha: MultiIndex) -> F {
    grid.dtan(f, alpha[0], alpha[1])
}

/// `∂̄^α φ = χ ∂̄^α ψ`.
pub fn dalpha_phi(grid: &Grid, geom: &GeometrySnapshot, alpha: MultiIndex) -> VolumeField {
    if order(alpha) == 0 {
        return geom.phi.clone();
    }
    VolumeField::outer(&geom.cutoff.chi, &dalpha(grid, &geom.psi, alpha))
}

/// `(∂₁f, ∂₂f, ∂₃f)` on the fixed slab.
pub fn grad_flat(grid: &Grid, f: &VolumeField) -> [VolumeField; 3] {
    let [d1, d2] = grid.grad_tan(f);
    [d1, d2, grid.d3(f)]
}

/// Combine flat derivatives into `∂^φ f`.
pub fn pull_back(geom: &GeometrySnapshot, d: [VolumeField; 3]) -> [VolumeField; 3] {
    let [d1, d2, d3] = d;
    let g1 = &d1 + &(&geom.a[2][0] * &d3);
    let g2 = &d2 + &(&geom.a[2][1] * &d3);
    let g3 = &geom.inv_d3phi * &d3;
    [g1, g2, g3]
}

/// `∂^φ f`, with `∂^φ_a = ∂_a − (∂_aφ/∂₃φ)∂₃` and `∂^φ₃ = ∂₃/∂₃φ`.
pub fn grad_phi(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot) -> Result<VectorField> {
    geom.require_invertible()?;
    Ok(VectorField(pull_back(geom, grad_flat(grid, f))))
}

/// Single component `∂^φ_i f`, `i ∈ {0, 1, 2}`.
pub fn dphi_i(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot, i: usize) -> VolumeField {
    match i {
        0 => &grid.d1(f) + &(&geom.a[2][0] * &grid.d3(f)),
        1 => &grid.d2(f) + &(&geom.a[2][1] * &grid.d3(f)),
        2 => &geom.inv_d3phi * &grid.d3(f),
        _ => panic!("component index {i} out of range"),
    }
}

/// `∂^φ · X`.
pub fn div_phi(grid: &Grid, x: &VectorField, geom: &GeometrySnapshot) -> Result<VolumeField> {
    geom.require_invertible()?;
    let d1 = grid.d1(&x.0[0]);
    let d2 = grid.d2(&x.0[1]);
    let v3 = [grid.d3(&x.0[0]), grid.d3(&x.0[1]), grid.d3(&x.0[2])];
    let mut out = &d1 + &d2;
    for i in 0..3 {
        out += &(&geom.a[2][i] * &v3[i]);
    }
    Ok(out)
}

/// `∂^φ × X`.
pub fn curl_phi(grid: &Grid, x: &VectorField, geom: &GeometrySnapshot) -> Result<VectorField> {
    geom.require_invertible()?;
    let g: Vec<[VolumeField; 3]> = x.0.iter().map(|c| pull_back(geom, grad_flat(grid, c))).collect();
    Ok(VectorField([
        &g[2][1] - &g[1][2],
        &g[0][2] - &g[2][0],
        &g[1][0] - &g[0][1],
    ]))
}

/// `Δ^φ f = ∂^φ · ∂^φ f` without dealiasing; this is the operator the elliptic solver inverts.
pub fn laplace_phi_collocated(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot) -> VolumeField {
    let g = VectorField(pull_back(geom, grad_flat(grid, f)));
    let d1 = grid.d1(&g.0[0]);
    let d2 = grid.d2(&g.0[1]);
    let mut out = &d1 + &d2;
    for i in 0..3 {
        out += &(&geom.a[2][i] * &grid.d3(&g.0[i]));
    }
    out
}

/// `Δ^φ f` with dealiasing between the gradient and divergence stages.
pub fn laplace_phi(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot) -> Result<VolumeField> {
    let g = grad_phi(grid, f, geom)?.map(|c| grid.dealiased(c));
    Ok(grid.dealiased(&div_phi(grid, &g, geom)?))
}

/// `v · 𝐍 − ∂_tφ`, the vertical transport numerator.
pub fn relative_flux(v: &VectorField, geom: &GeometrySnapshot) -> VolumeField {
    let mut w = &v.0[2] - &geom.dt_phi;
    w += &(&v.0[0] * &geom.bf_n[0]);
    w += &(&v.0[1] * &geom.bf_n[1]);
    w
}

/// Spatial part of `D_t^φ f`: `v̄·∂̄f + (v·𝐍 − ∂_tφ)/∂₃φ · ∂₃f`, dealiased.
pub fn advect(grid: &Grid, v: &VectorField, f: &VolumeField, geom: &GeometrySnapshot) -> Result<VolumeField> {
    geom.require_invertible()?;
    Ok(grid.dealiased(&advect_collocated(grid, v, f, geom)))
}

pub(crate) fn advect_collocated(grid: &Grid, v: &VectorField, f: &VolumeField, geom: &GeometrySnapshot) -> VolumeField {
    let [d1, d2, d3] = grad_flat(grid, f);
    let w = &relative_flux(v, geom) * &geom.inv_d3phi;
    let mut out = &v.0[0] * &d1;
    out += &(&v.0[1] * &d2);
    out += &(&w * &d3);
    out
}

/// Alinhac good unknowns `𝐕 = ∂̄^α v − ∂^φ₃v ∂̄^αφ` and `𝐐 = ∂̄^α q − ∂^φ₃q ∂̄^αφ`.
#[derive(Debug, Clone)]
pub struct GoodUnknownPair {
    pub v: VectorField,
    pub q: VolumeField,
    pub alpha: MultiIndex,
}

/// `∂̄^α f − ∂^φ₃f ∂̄^αφ`.
pub fn good_unknown(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot, alpha: MultiIndex) -> VolumeField {
    let dphi = dalpha_phi(grid, geom, alpha);
    &dalpha(grid, f, alpha) - &(&dphi_i(grid, f, geom, 2) * &dphi)
}

pub fn good_unknowns(
    grid: &Grid,
    v: &VectorField,
    q: &VolumeField,
    geom: &GeometrySnapshot,
    alpha: MultiIndex,
) -> Result<GoodUnknownPair> {
    if order(alpha) != 3 {
        return Err(Error::InvalidArgument(format!("good unknowns need |alpha| = 3, got {alpha:?}")));
    }
    geom.require_invertible()?;
    Ok(GoodUnknownPair {
        v: v.map(|c| good_unknown(grid, c, geom, alpha)),
        q: good_unknown(grid, q, geom, alpha),
        alpha,
    })
}

/// `[T, f, g] = T(fg) − T(f)g − fT(g)` with `T = ∂̄^α`.
pub fn triple_commutator(grid: &Grid, alpha: MultiIndex, f: &VolumeField, g: &VolumeField) -> VolumeField {
    let tfg = dalpha(grid, &(f * g), alpha);
    &(&tfg - &(&dalpha(grid, f, alpha) * g)) - &(f * &dalpha(grid, g, alpha))
}

/// `[T, h]g = T(hg) − hT(g)` with `T = ∂̄^α`.
pub fn commutator(grid: &Grid, alpha: MultiIndex, h: &VolumeField, g: &VolumeField) -> VolumeField {
    if order(alpha) == 0 {
        return VolumeField::constant_like(g, 0.0);
    }
    &dalpha(grid, &(h * g), alpha) - &(h * &dalpha(grid, g, alpha))
}

/// First-order remainder `R¹_i(f)` of the tangential commutator with `∂^φ_i`.
pub fn remainder_r1(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot, alpha: MultiIndex, i: usize) -> VolumeField {
    let ap = unit_subindex(alpha);
    let rest = minus(alpha, ap);
    let d3f = grid.d3(f);
    let d3phi = geom.d3phi();
    let inv = &geom.inv_d3phi;
    let inv2 = inv * inv;
    // [∂̄^{α−α'}, 1/(∂₃φ)²] ∂̄^{α'}∂₃φ
    let tail = commutator(grid, rest, &inv2, &dalpha(grid, d3phi, ap));
    match i {
        0 | 1 => {
            let djphi = &geom.dphi[i];
            let ratio = djphi * inv;
            let mut r = -&triple_commutator(grid, alpha, &ratio, &d3f);
            r -= &(&d3f * &triple_commutator(grid, alpha, djphi, inv));
            r += &(&(&d3f * djphi) * &tail);
            r
        }
        2 => &triple_commutator(grid, alpha, inv, &d3f) - &(&d3f * &tail),
        _ => panic!("component index {i} out of range"),
    }
}

/// `R²_i(f) = R¹_i(f) + ∂^φ₃∂^φ_i f ∂̄^αφ`.
pub fn remainder_r2(grid: &Grid, f: &VolumeField, geom: &GeometrySnapshot, alpha: MultiIndex, i: usize) -> VolumeField {
    let r1 = remainder_r1(grid, f, geom, alpha, i);
    let dd = dphi_i(grid, &dphi_i(grid, f, geom, i), geom, 2);
    &r1 + &(&dd * &dalpha_phi(grid, geom, alpha))
}

/// Volume `L²` norm.
pub fn l2(grid: &Grid, f: &VolumeField) -> f64 {
    grid.integrate_vol(&(f * f)).max(0.0).sqrt()
}

/// Surface `L²` norm.
pub fn l2_surface(grid: &Grid, f: &SurfaceField) -> f64 {
    grid.integrate(&(f * f)).max(0.0).sqrt()
}

/// `‖∂̄^α∂^φ_i f − ∂^φ_i(∂̄^αf − ∂^φ₃f ∂̄^αφ) − R²_i(f)‖₀`, both sides assembled term by term.
pub fn alinhac_identity_residual(
    grid: &Grid,
    f: &VolumeField,
    geom: &GeometrySnapshot,
    alpha: MultiIndex,
    i: usize,
) -> Result<f64> {
    geom.require_invertible()?;
    if order(alpha) == 0 || i > 2 {
        return Err(Error::InvalidArgument(format!("need |alpha| >= 1 and i < 3, got {alpha:?}, {i}")));
    }
    let lhs = dalpha(grid, &dphi_i(grid, f, geom, i), alpha);
    let good = good_unknown(grid, f, geom, alpha);
    let rhs = &dphi_i(grid, &good, geom, i) + &remainder_r2(grid, f, geom, alpha, i);
    Ok(l2(grid, &(&lhs - &rhs)))
}

/// `𝒮 = (∂₃v·N)∂̄^αψ + Σ_{1 ≤ |β| ≤ |α|−1} C_α^β ∂̄^βv · ∂̄^{α−β}N` on the top boundary.
pub fn kinematic_source(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot, alpha: MultiIndex) -> SurfaceField {
    let top: [SurfaceField; 3] = v.top();
    let d3v: [SurfaceField; 3] = std::array::from_fn(|c| grid.d3(&v.0[c]).top());
    let d3v_n = dot_surface(&d3v, &geom.n);
    let mut s = &d3v_n * &dalpha(grid, &geom.psi, alpha);
    let k = order(alpha);
    for beta in sub_indices(alpha) {
        let ob = order(beta);
        if ob == 0 || ob == k {
            continue;
        }
        let c = multi_binomial(alpha, beta);
        let dv: [SurfaceField; 3] = std::array::from_fn(|m| dalpha(grid, &top[m], beta));
        let rest = minus(alpha, beta);
        let dn: [SurfaceField; 3] = [
            dalpha(grid, &geom.n[0], rest),
            dalpha(grid, &geom.n[1], rest),
            SurfaceField::constant_like(&geom.n[2], 0.0),
        ];
        s += &(&dot_surface(&dv, &dn) * c);
    }
    s
}

pub fn dot_surface(a: &[SurfaceField; 3], b: &[SurfaceField; 3]) -> SurfaceField {
    &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2])
}

/// `‖∂̄^α(v·N) + v̄·∂̄(∂̄^αψ) − 𝐕·N − 𝒮‖` on the top boundary, using the kinematic
/// condition `∂_t∂̄^αψ = ∂̄^α(v·N)`.
pub fn higher_kinematic_residual(
    grid: &Grid,
    v: &VectorField,
    geom: &GeometrySnapshot,
    alpha: MultiIndex,
) -> Result<f64> {
    geom.require_invertible()?;
    if order(alpha) == 0 {
        return Err(Error::InvalidArgument("need |alpha| >= 1".into()));
    }
    let top = v.top();
    let dt_dpsi = dalpha(grid, &dot_surface(&top, &geom.n), alpha);
    let da_psi = dalpha(grid, &geom.psi, alpha);
    let [g1, g2] = grid.grad_tan(&da_psi);
    let transport = &(&top[0] * &g1) + &(&top[1] * &g2);
    let big_v: [SurfaceField; 3] = std::array::from_fn(|c| good_unknown(grid, &v.0[c], geom, alpha).top());
    let s = kinematic_source(grid, v, geom, alpha);
    let r = &(&(&dt_dpsi + &transport) - &dot_surface(&big_v, &geom.n)) - &s;
    Ok(l2_surface(grid, &r))
}

/// `‖∂₃v·N + ∂̄·v̄‖` on the top boundary.
pub fn trace_identity_residual(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot) -> f64 {
    let d3v: [SurfaceField; 3] = std::array::from_fn(|c| grid.d3(&v.0[c]).top());
    let top = v.top();
    let div_bar = &grid.d1(&top[0]) + &grid.d2(&top[1]);
    l2_surface(grid, &(&dot_surface(&d3v, &geom.n) + &div_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CutoffProfile;
    use std::f64::consts::PI;

    fn setup(nx: usize, nz: usize, b: f64, psi: impl Fn(f64, f64) -> f64) -> (Grid, GeometrySnapshot) {
        let g = Grid::new(nx, nx, nz, b).unwrap();
        let c = CutoffProfile::new_unchecked(&g, 0.0, b, 0.0).unwrap();
        let p = SurfaceField::from_fn(&g, psi);
        let geo = GeometrySnapshot::lift(&g, &p, &SurfaceField::zeros(&g), &c);
        (g, geo)
    }

    fn max_diff(a: &VolumeField, b: &VolumeField) -> f64 {
        (a - b).sup()
    }

    #[test]
    fn flat_geometry_reduces_to_plain_derivatives() {
        let (g, geo) = setup(16, 12, 3.0, |_, _| 0.0);
        let f = VolumeField::from_fn(&g, |x, y, z| (x + y).sin() * (z * 0.5).cos() + z * z);
        let gp = grad_phi(&g, &f, &geo).unwrap();
        let flat = grad_flat(&g, &f);
        for i in 0..3 {
            assert!(max_diff(&gp.0[i], &flat[i]) < 1e-12);
        }
        let lap = laplace_phi(&g, &VolumeField::from_fn(&g, |x, _, _| x.sin()), &geo).unwrap();
        assert!(max_diff(&lap, &VolumeField::from_fn(&g, |x, _, _| -x.sin())) < 1e-12);
        let c = laplace_phi(&g, &VolumeField::constant(&g, 2.0), &geo).unwrap();
        assert_eq!(c.sup(), 0.0);
        let lin = VectorField::new(
            VolumeField::from_fn(&g, |_, _, z| 2.0 * z),
            VolumeField::constant(&g, 1.0),
            VolumeField::from_fn(&g, |_, _, _| -3.0),
        );
        assert!(div_phi(&g, &lin, &geo).unwrap().sup() < 1e-10);
    }

    #[test]
    fn gradient_of_phi_is_vertical_unit() {
        let (g, geo) = setup(16, 17, 10.0, |x, y| 0.1 * x.cos() + 0.05 * (x + y).sin());
        let gp = grad_phi(&g, &geo.phi, &geo).unwrap();
        assert!(gp.0[0].sup() < 1e-10);
        assert!(gp.0[1].sup() < 1e-10);
        assert!(max_diff(&gp.0[2], &VolumeField::constant(&g, 1.0)) < 1e-10);
    }

    #[test]
    fn gradient_matches_eulerian_pullback() {
        let (g, geo) = setup(16, 17, 10.0, |_, y| 0.1 * y.cos());
        // f = x₁ + φ², i.e. u(y) = y₁ + y₃² composed with Φ; x₁ itself is not periodic,
        // so use sin y₁ + y₃² whose Eulerian gradient is (cos y₁, 0, 2y₃)
        let f = &VolumeField::from_fn(&g, |x, _, _| x.sin()) + &(&geo.phi * &geo.phi);
        let gp = grad_phi(&g, &f, &geo).unwrap();
        let e1 = VolumeField::from_fn(&g, |x, _, _| x.cos());
        let e3 = &geo.phi * 2.0;
        assert!(max_diff(&gp.0[0], &e1) < 1e-8);
        assert!(gp.0[1].sup() < 1e-8);
        assert!(max_diff(&gp.0[2], &e3) < 1e-8);
    }

    #[test]
    fn curl_of_gradient_and_div_of_curl_vanish() {
        let (g, geo) = setup(16, 17, 10.0, |x, y| 0.1 * x.cos() * y.sin());
        let f = VolumeField::from_fn(&g, |x, y, z| (x + 2.0 * y).sin() * (0.2 * z).cos());
        let grad = grad_phi(&g, &f, &geo).unwrap();
        assert!(curl_phi(&g, &grad, &geo).unwrap().sup() < 1e-8);
        let a = VectorField::new(
            VolumeField::from_fn(&g, |x, _, z| x.cos() * (0.1 * z).sin()),
            VolumeField::from_fn(&g, |_, y, z| y.sin() * z / 10.0),
            VolumeField::from_fn(&g, |x, y, _| (x - y).cos()),
        );
        let c = curl_phi(&g, &a, &geo).unwrap();
        assert!(div_phi(&g, &c, &geo).unwrap().sup() < 1e-8);
    }

    #[test]
    fn flat_curl_matches_symbolic() {
        let b = 3.0;
        let (g, geo) = setup(16, 17, b, |_, _| 0.0);
        let gz = |z: f64| (z / b).exp();
        let x = VectorField::new(
            VolumeField::from_fn(&g, |_, y, z| -y.sin() * gz(z)),
            VolumeField::zeros(&g),
            VolumeField::zeros(&g),
        );
        let c = curl_phi(&g, &x, &geo).unwrap();
        // curl (X₁, 0, 0) = (0, ∂₃X₁, −∂₂X₁)
        let e2 = VolumeField::from_fn(&g, |_, y, z| -y.sin() * gz(z) / b);
        let e3 = VolumeField::from_fn(&g, |_, y, z| y.cos() * gz(z));
        assert!(c.0[0].sup() < 1e-8);
        assert!(max_diff(&c.0[1], &e2) < 1e-8);
        assert!(max_diff(&c.0[2], &e3) < 1e-8);
    }

    #[test]
    fn laplacian_matches_manufactured_pullback() {
        let b = 10.0;
        let (g, geo) = setup(24, 21, b, |x, _| 0.1 * x.cos());
        // u(y) = sin y₁ cos(π y₃ / b): Δu = −(1 + π²/b²) u
        let u = |y1: f64, y3: f64| y1.sin() * (PI * y3 / b).cos();
        let f = VolumeField::from_fn(&g, |x, _, _| x).zip_map(&geo.phi, u);
        let lap = laplace_phi(&g, &f, &geo).unwrap();
        let exact = &f * (-(1.0 + PI * PI / (b * b)));
        assert!(max_diff(&lap, &exact) < 1e-7, "{}", max_diff(&lap, &exact));
    }

    #[test]
    fn advection_reduces_to_plain_transport() {
        let (g, geo) = setup(16, 12, 2.0, |_, _| 0.0);
        let v = VectorField::new(
            VolumeField::from_fn(&g, |_, y, _| y.cos()),
            VolumeField::constant(&g, 0.5),
            VolumeField::from_fn(&g, |x, _, z| x.sin() * z),
        );
        let f = VolumeField::from_fn(&g, |x, y, z| x.sin() + y.cos() * z);
        let a = advect(&g, &v, &f, &geo).unwrap();
        let oracle = VolumeField::from_fn(&g, |x, y, z| {
            y.cos() * x.cos() + 0.5 * (-y.sin() * z) + x.sin() * z * y.cos()
        });
        assert!(max_diff(&a, &oracle) < 1e-8);
        assert_eq!(advect(&g, &VectorField::zeros(&g), &f, &geo).unwrap().sup(), 0.0);
    }

    #[test]
    fn advection_is_tangential_at_the_top() {
        let g = Grid::new(16, 16, 13, 10.0).unwrap();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 0.2).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, _| 0.2 * x.sin());
        let v = VectorField::new(
            VolumeField::from_fn(&g, |_, y, _| 1.0 + 0.3 * y.cos()),
            VolumeField::from_fn(&g, |x, _, _| 0.2 * x.cos()),
            VolumeField::from_fn(&g, |x, y, z| (x + y).sin() * (1.0 + z / 10.0)),
        );
        let geo0 = GeometrySnapshot::lift(&g, &psi, &SurfaceField::zeros(&g), &c);
        let psi_t = dot_surface(&v.top(), &geo0.n);
        let geo = GeometrySnapshot::lift(&g, &psi, &psi_t, &c);
        let f = VolumeField::from_fn(&g, |x, y, z| (x - y).cos() * (z / 5.0).exp());
        let a = advect_collocated(&g, &v, &f, &geo).top();
        let [f1, f2] = g.grad_tan(&f.top());
        let expect = &(&v.top()[0] * &f1) + &(&v.top()[1] * &f2);
        assert!((&a - &expect).sup() < 1e-12);
    }

    #[test]
    fn good_unknowns_degenerate_cases() {
        let (g, geo) = setup(16, 12, 3.0, |_, _| 0.0);
        let v = VectorField::new(
            VolumeField::from_fn(&g, |x, y, _| (x + y).sin()),
            VolumeField::from_fn(&g, |x, _, z| x.cos() * z),
            VolumeField::constant(&g, 1.0),
        );
        let q = VolumeField::from_fn(&g, |_, y, z| y.sin() * z);
        let gu = good_unknowns(&g, &v, &q, &geo, [2, 1]).unwrap();
        for i in 0..3 {
            assert!(max_diff(&gu.v.0[i], &g.dtan(&v.0[i], 2, 1)) < 1e-12);
        }
        assert!(good_unknowns(&g, &v, &q, &geo, [1, 1]).is_err());

        let (g, geo) = setup(16, 13, 3.0, |x, y| 0.1 * (x + y).cos());
        let q = VolumeField::from_fn(&g, |_, y, z| y.sin() * z);
        let vz = VectorField::new(
            VolumeField::from_fn(&g, |_, _, z| z * z),
            VolumeField::from_fn(&g, |_, _, z| z.sin()),
            VolumeField::zeros(&g),
        );
        let gu = good_unknowns(&g, &vz, &q, &geo, [3, 0]).unwrap();
        let dphi = dalpha_phi(&g, &geo, [3, 0]);
        for i in 0..3 {
            let e = -&(&dphi_i(&g, &vz.0[i], &geo, 2) * &dphi);
            assert!(max_diff(&gu.v.0[i], &e) < 1e-10);
        }
    }

    #[test]
    fn good_unknowns_match_pointwise_arithmetic() {
        let b = 4.0;
        let g = Grid::new(16, 16, 13, b).unwrap();
        let c = CutoffProfile::new(&g, 0.0, b, 0.1).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, y| 0.1 * (x - y).sin());
        let geo = GeometrySnapshot::lift(&g, &psi, &SurfaceField::zeros(&g), &c);
        let q = VolumeField::from_fn(&g, |x, y, z| (2.0 * x + y).cos() * (z / b).exp());
        let v = VectorField::new(q.clone(), q.map(|x| 2.0 * x), VolumeField::zeros(&g));
        let gu = good_unknowns(&g, &v, &q, &geo, [1, 2]).unwrap();
        // ∂₁∂₂² cos(2x₁+x₂) = 2 sin(2x₁+x₂)
        let daq = VolumeField::from_fn(&g, |x, y, z| 2.0 * (2.0 * x + y).sin() * (z / b).exp());
        let d3q = VolumeField::from_fn(&g, |x, y, z| (2.0 * x + y).cos() * (z / b).exp() / b);
        let chi = &geo.cutoff.chi;
        let m = g.surface_len();
        let mut worst: f64 = 0.0;
        for idx in 0..g.volume_len() {
            let (k, s) = (idx / m, idx % m);
            let (x, y) = (g.x1(s % 16), g.x2(s / 16));
            // ∂₁∂₂² 0.1 sin(x₁−x₂) = −0.1 cos(x₁−x₂)
            let dpsi = -0.1 * (x - y).cos();
            let d3phi = geo.d3phi().values()[idx];
            let expect = daq.values()[idx] - d3q.values()[idx] / d3phi * chi[k] * dpsi;
            worst = worst.max((gu.q.values()[idx] - expect).abs());
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn alinhac_identity_holds() {
        let b = 10.0;
        let f = |g: &Grid| VolumeField::from_fn(g, |x, _, z| x.sin() * (PI * z / b).cos());
        let (g, geo) = setup(16, 16, b, |_, _| 0.0);
        for i in 0..3 {
            assert!(alinhac_identity_residual(&g, &f(&g), &geo, [2, 1], i).unwrap() <= 1e-12);
        }
        let (g, geo) = setup(16, 16, b, |_, y| 0.05 * y.cos());
        for alpha in [[3, 0], [2, 1], [1, 2], [0, 3]] {
            for i in 0..3 {
                let r = alinhac_identity_residual(&g, &f(&g), &geo, alpha, i).unwrap();
                assert!(r < 1e-6, "alpha {alpha:?} i {i}: {r}");
            }
        }
        let c = VolumeField::constant(&g, 1.5);
        assert_eq!(alinhac_identity_residual(&g, &c, &geo, [3, 0], 1).unwrap(), 0.0);
    }

    #[test]
    fn higher_kinematic_identity() {
        let b = 10.0;
        let g = Grid::new(16, 16, 16, b).unwrap();
        let c = CutoffProfile::new(&g, 0.0, b, 0.1).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, y| 0.1 * x.cos() + 0.05 * (x + y).sin());
        let geo = GeometrySnapshot::lift(&g, &psi, &SurfaceField::zeros(&g), &c);
        let v = VectorField::new(
            VolumeField::from_fn(&g, |x, y, z| (x + y).sin() * (z / b).exp()),
            VolumeField::from_fn(&g, |x, _, z| (2.0 * x).cos() * (1.0 + z / b)),
            VolumeField::from_fn(&g, |_, y, z| y.sin() * z / b),
        );
        let r = higher_kinematic_residual(&g, &v, &geo, [2, 1]).unwrap();
        assert!(r < 1e-6, "{r}");
        assert_eq!(higher_kinematic_residual(&g, &VectorField::zeros(&g), &geo, [3, 0]).unwrap(), 0.0);

        let psi_c = SurfaceField::constant(&g, 0.1);
        let geo_c = GeometrySnapshot::lift(&g, &psi_c, &SurfaceField::zeros(&g), &c);
        let vz = VectorField::new(
            VolumeField::from_fn(&g, |_, _, z| z),
            VolumeField::zeros(&g),
            VolumeField::from_fn(&g, |_, _, z| z * z),
        );
        assert!(higher_kinematic_residual(&g, &vz, &geo_c, [1, 2]).unwrap() < 1e-10);
    }

    #[test]
    fn trace_identity_on_constant_and_solenoidal_fields() {
        let (g, geo) = setup(16, 17, 10.0, |_, y| 0.05 * y.cos());
        let v = VectorField::new(VolumeField::constant(&g, 0.3), VolumeField::constant(&g, -1.0), VolumeField::zeros(&g));
        assert_eq!(trace_identity_residual(&g, &v, &geo), 0.0);
        let a = VectorField::new(
            VolumeField::from_fn(&g, |x, y, z| (x + y).sin() * (z / 10.0).exp()),
            VolumeField::from_fn(&g, |x, _, z| x.cos() * (1.0 + z / 10.0)),
            VolumeField::from_fn(&g, |_, y, _| y.sin()),
        );
        let w = curl_phi(&g, &a, &geo).unwrap();
        let r = trace_identity_residual(&g, &w, &geo);
        assert!(r < 1e-7, "{r}");
    }

    #[test]
    fn multi_index_helpers() {
        assert_eq!(multi_binomial([2, 1], [1, 1]), 2.0);
        assert_eq!(multi_binomial([3, 0], [2, 0]), 3.0);
        assert_eq!(sub_indices([1, 2]).count(), 6);
        assert_eq!(unit_subindex([0, 3]), [0, 1]);
    }
}
