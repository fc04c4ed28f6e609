//! Cutoff profile, flattening map and surface geometry derived from `ψ`.

use log::warn;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SurfaceField, VolumeField};

/// Smoothstep `S(u) = 35u⁴ − 84u⁵ + 70u⁶ − 20u⁷` and its first three derivatives.
fn smoothstep(u: f64) -> [f64; 4] {
    if u <= 0.0 {
        return [0.0; 4];
    }
    if u >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let v = 1.0 - u;
    let u2 = u * u;
    let s = u2 * u2 * (35.0 - 84.0 * u + 70.0 * u2 - 20.0 * u2 * u);
    let s1 = 140.0 * u2 * u * v * v * v;
    let s2 = 420.0 * u2 * v * v * (1.0 - 2.0 * u);
    let s3 = 840.0 * u * v * (1.0 - 5.0 * u + 5.0 * u2);
    [s, s1, s2, s3]
}

/// Maximum of `S'` on `[0, 1]`, attained at `u = 1/2`.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 35.0 / 16.0;

/// Vertical cutoff `χ(x₃)`: `χ = 1` on `[−δ₀, 0]`, `χ = 0` on `[−b, −δ₁]`,
/// degree-7 smoothstep (C³) in between.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    pub delta0: f64,
    pub delta1: f64,
    /// Nodal values of `χ, χ', χ'', χ'''` on the vertical grid.
    pub chi: Vec<f64>,
    pub chi1: Vec<f64>,
    pub chi2: Vec<f64>,
    pub chi3: Vec<f64>,
    /// `max |χ'|`, equal to `35 / (16 (δ₁ − δ₀))`.
    pub max_slope: f64,
    /// Required bound `1 / (sup|ψ₀| + 1)`.
    pub slope_bound: f64,
    /// `max |χ''|` and `max |χ'''|` on the grid.
    pub max_chi2: f64,
    pub max_chi3: f64,
}

impl CutoffProfile {
    /// Build the cutoff and enforce `max|χ'| ≤ 1/(psi0_sup + 1)`.
    pub fn new(grid: &Grid, delta0: f64, delta1: f64, psi0_sup: f64) -> Result<Self> {
        let c = Self::new_unchecked(grid, delta0, delta1, psi0_sup)?;
        if c.max_slope > c.slope_bound {
            return Err(Error::InvalidCutoff(format!(
                "cutoff slope {:.6} exceeds 1/(sup|psi0|+1) = {:.6}; widen delta1 - delta0",
                c.max_slope, c.slope_bound
            )));
        }
        Ok(c)
    }

    /// Build the cutoff checking only `0 ≤ δ₀ < δ₁ ≤ b`; the slope bound is reported, not enforced.
    pub fn new_unchecked(grid: &Grid, delta0: f64, delta1: f64, psi0_sup: f64) -> Result<Self> {
        let b = grid.depth();
        if !(delta0 >= 0.0 && delta0 < delta1 && delta1 <= b) {
            return Err(Error::InvalidCutoff(format!(
                "need 0 <= delta0 < delta1 <= b, got delta0 = {delta0}, delta1 = {delta1}, b = {b}"
            )));
        }
        if !(psi0_sup >= 0.0) || !psi0_sup.is_finite() {
            return Err(Error::InvalidCutoff(format!("sup|psi0| must be finite, got {psi0_sup}")));
        }
        let w = delta1 - delta0;
        let n = grid.nz();
        let (mut chi, mut chi1, mut chi2, mut chi3) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &z in grid.chebyshev_nodes() {
            let [s, s1, s2, s3] = smoothstep((-z - delta0) / w);
            chi.push(1.0 - s);
            chi1.push(s1 / w);
            chi2.push(-s2 / (w * w));
            chi3.push(s3 / (w * w * w));
        }
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(Self {
            delta0,
            delta1,
            max_chi2: sup(&chi2),
            max_chi3: sup(&chi3),
            chi,
            chi1,
            chi2,
            chi3,
            max_slope: SMOOTHSTEP_MAX_SLOPE / w,
            slope_bound: 1.0 / (psi0_sup + 1.0),
        })
    }

    /// `χ` at an arbitrary depth.
    pub fn eval(&self, x3: f64) -> f64 {
        1.0 - smoothstep((-x3 - self.delta0) / (self.delta1 - self.delta0))[0]
    }

    /// `χ'` at an arbitrary depth.
    pub fn eval_slope(&self, x3: f64) -> f64 {
        let w = self.delta1 - self.delta0;
        smoothstep((-x3 - self.delta0) / w)[1] / w
    }
}

/// Everything derived from `(ψ, ψ_t)` at one instant.
///
/// `a[r][c]` holds the cofactor matrix with `∂^φ_i = Σ_j a[j][i] ∂_j`:
/// rows 0 and 1 are unit rows, row 2 is `(−∂₁φ/∂₃φ, −∂₂φ/∂₃φ, 1/∂₃φ)`.
/// `a_inv` has row 2 equal to `(∂₁φ, ∂₂φ, ∂₃φ)`; it is also the Jacobian of `Φ`.
#[derive(Debug, Clone)]
pub struct GeometrySnapshot {
    pub psi: SurfaceField,
    pub psi_t: SurfaceField,
    /// `(∂₁ψ, ∂₂ψ)`.
    pub dpsi: [SurfaceField; 2],
    /// `(∂₁²ψ, ∂₁∂₂ψ, ∂₂²ψ)`.
    pub d2psi: [SurfaceField; 3],
    pub phi: VolumeField,
    /// `(∂₁φ, ∂₂φ, ∂₃φ)`.
    pub dphi: [VolumeField; 3],
    pub dt_phi: VolumeField,
    /// `1 / ∂₃φ`.
    pub inv_d3phi: VolumeField,
    pub a: [[VolumeField; 3]; 3],
    pub a_inv: [[VolumeField; 3]; 3],
    /// Surface normal `N = (−∂₁ψ, −∂₂ψ, 1)`.
    pub n: [SurfaceField; 3],
    /// Volume normal `𝐍 = (−∂₁φ, −∂₂φ, 1)`.
    pub bf_n: [VolumeField; 3],
    pub norm_n: SurfaceField,
    /// Mean curvature `ℋ = −∂̄·(∂̄ψ/|N|)`.
    pub h: SurfaceField,
    pub min_d3phi: f64,
    /// `b − sup|ψ|`.
    pub depth_margin: f64,
    pub cutoff: CutoffProfile,
}

impl GeometrySnapshot {
    /// Lift `ψ` into the slab through `φ = x₃ + χ(x₃)ψ(x')`.
    pub fn lift(grid: &Grid, psi: &SurfaceField, psi_t: &SurfaceField, cutoff: &CutoffProfile) -> Self {
        let dpsi = grid.grad_tan(psi);
        let mut d2 = grid.dtan_many(psi, &[(2, 0), (1, 1), (0, 2)]);
        let d2psi: [SurfaceField; 3] = [d2.remove(0), d2.remove(0), d2.remove(0)];

        let depth = VolumeField::from_fn(grid, |_, _, x3| x3);
        let phi = &depth + &VolumeField::outer(&cutoff.chi, psi);
        let d1phi = VolumeField::outer(&cutoff.chi, &dpsi[0]);
        let d2phi = VolumeField::outer(&cutoff.chi, &dpsi[1]);
        let d3phi = &VolumeField::constant(grid, 1.0) + &VolumeField::outer(&cutoff.chi1, psi);
        let dt_phi = VolumeField::outer(&cutoff.chi, psi_t);
        let inv_d3phi = d3phi.map(|x| 1.0 / x);

        let one = VolumeField::constant(grid, 1.0);
        let zero = VolumeField::zeros(grid);
        let a = [
            [one.clone(), zero.clone(), zero.clone()],
            [zero.clone(), one.clone(), zero.clone()],
            [-&(&d1phi * &inv_d3phi), -&(&d2phi * &inv_d3phi), inv_d3phi.clone()],
        ];
        let a_inv = [
            [one.clone(), zero.clone(), zero.clone()],
            [zero.clone(), one.clone(), zero],
            [d1phi.clone(), d2phi.clone(), d3phi.clone()],
        ];

        let n = [-&dpsi[0], -&dpsi[1], SurfaceField::constant(grid, 1.0)];
        let bf_n = [-&d1phi, -&d2phi, one];
        let norm_n = dpsi[0].zip_map(&dpsi[1], |p, q| (1.0 + p * p + q * q).sqrt());
        let h = mean_curvature_from(grid, &dpsi, &norm_n);

        let min_d3phi = d3phi.values().iter().copied().fold(f64::INFINITY, f64::min);
        let depth_margin = grid.depth() - psi.sup();
        if min_d3phi <= 0.0 {
            warn!("flattening map is not invertible: min d3phi = {min_d3phi:.3e}");
        }

        Self {
            psi: psi.clone(),
            psi_t: psi_t.clone(),
            dpsi,
            d2psi,
            phi,
            dphi: [d1phi, d2phi, d3phi],
            dt_phi,
            inv_d3phi,
            a,
            a_inv,
            n,
            bf_n,
            norm_n,
            h,
            min_d3phi,
            depth_margin,
            cutoff: cutoff.clone(),
        }
    }

    /// Fails unless `∂₃φ > 0` everywhere.
    pub fn require_invertible(&self) -> Result<()> {
        if self.min_d3phi > 0.0 && self.min_d3phi.is_finite() {
            Ok(())
        } else {
            Err(Error::DegenerateGeometry { min_d3phi: self.min_d3phi, depth_margin: self.depth_margin })
        }
    }

    /// Replace `ψ_t` and `∂_tφ = χψ_t`, keeping the spatial geometry.
    pub fn with_psi_t(mut self, psi_t: &SurfaceField) -> Self {
        self.dt_phi = VolumeField::outer(&self.cutoff.chi, psi_t);
        self.psi_t = psi_t.clone();
        self
    }

    pub fn d3phi(&self) -> &VolumeField {
        &self.dphi[2]
    }
}

/// `ℋ = −∂̄·(∂̄ψ/|N|)` with the quotient dealiased.
pub fn mean_curvature(grid: &Grid, psi: &SurfaceField) -> SurfaceField {
    let dpsi = grid.grad_tan(psi);
    let norm_n = dpsi[0].zip_map(&dpsi[1], |p, q| (1.0 + p * p + q * q).sqrt());
    mean_curvature_from(grid, &dpsi, &norm_n)
}

fn mean_curvature_from(grid: &Grid, dpsi: &[SurfaceField; 2], norm_n: &SurfaceField) -> SurfaceField {
    let q1 = grid.dealiased(&dpsi[0].zip_map(norm_n, |a, n| a / n));
    let q2 = grid.dealiased(&dpsi[1].zip_map(norm_n, |a, n| a / n));
    -&(&grid.d1(&q1) + &grid.d2(&q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid {
        Grid::new(16, 16, 17, 10.0).unwrap()
    }

    #[test]
    fn default_band_is_accepted() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 1.0).unwrap();
        assert!(c.max_slope <= c.slope_bound);
        assert_eq!(c.chi[0], 1.0);
        assert_eq!(*c.chi.last().unwrap(), 0.0);
        assert!(c.chi.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn narrow_band_is_rejected_with_closed_form_slope() {
        let g = grid();
        let err = CutoffProfile::new(&g, 4.0, 4.1, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidCutoff(_)));
        let c = CutoffProfile::new_unchecked(&g, 4.0, 4.1, 1.0).unwrap();
        assert_abs_diff_eq!(c.max_slope, 21.875, epsilon = 1e-12);
        // dense sampling of χ'
        let dense = (0..=100_000)
            .map(|i| c.eval_slope(-4.0 - 0.1 * i as f64 / 100_000.0))
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(dense, 21.875, epsilon = 1e-6);
        assert_abs_diff_eq!(c.slope_bound, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn flat_surface_has_unit_slope_bound() {
        let g = grid();
        let c = CutoffProfile::new(&g, 1.0, 9.0, 0.0).unwrap();
        assert_eq!(c.slope_bound, 1.0);
        assert!(CutoffProfile::new(&g, 2.0, 1.0, 0.0).is_err());
        assert!(CutoffProfile::new(&g, 0.0, 11.0, 0.0).is_err());
    }

    #[test]
    fn cutoff_plateaus() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.5, 9.0, 0.0).unwrap();
        for (k, &z) in g.chebyshev_nodes().iter().enumerate() {
            if z > -0.5 {
                assert_eq!(c.chi[k], 1.0);
            }
            if z <= -9.0 {
                assert_eq!(c.chi[k], 0.0);
            }
        }
    }

    #[test]
    fn slope_matches_collocation_derivative_on_full_band() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 0.0).unwrap();
        let chi = VolumeField::outer(&c.chi, &SurfaceField::constant(&g, 1.0));
        let d = g.d3(&chi);
        for (k, &s) in c.chi1.iter().enumerate() {
            assert_abs_diff_eq!(d.values()[k * g.surface_len()], s, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_surface_geometry() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 0.0).unwrap();
        let zero = SurfaceField::zeros(&g);
        let geo = GeometrySnapshot::lift(&g, &zero, &zero, &c);
        assert_eq!(geo.min_d3phi, 1.0);
        assert_eq!(geo.phi, VolumeField::from_fn(&g, |_, _, z| z));
        for r in 0..3 {
            for col in 0..3 {
                let e = if r == col { 1.0 } else { 0.0 };
                assert!(geo.a[r][col].values().iter().all(|&x| x == e));
                assert!(geo.a_inv[r][col].values().iter().all(|&x| x == e));
            }
        }
        assert!(geo.n[2].values().iter().all(|&x| x == 1.0));
        assert_eq!(geo.h.sup(), 0.0);
    }

    #[test]
    fn constant_surface_has_unit_top_stretch() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 0.7).unwrap();
        let psi = SurfaceField::constant(&g, 0.7);
        let geo = GeometrySnapshot::lift(&g, &psi, &SurfaceField::zeros(&g), &c);
        assert!(geo.d3phi().top().values().iter().all(|&x| x == 1.0));
        assert!(geo.phi.top().values().iter().all(|&x| x == 0.7));
        assert!(geo.phi.bottom().values().iter().all(|&x| x == -10.0));
    }

    #[test]
    fn cofactor_inverse_and_jacobian() {
        let g = grid();
        let c = CutoffProfile::new(&g, 0.0, 10.0, 0.1).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, _| 0.1 * x.cos());
        let psi_t = SurfaceField::from_fn(&g, |_, y| 0.3 * y.sin());
        let geo = GeometrySnapshot::lift(&g, &psi, &psi_t, &c);
        let n = g.volume_len();
        for p in 0..n {
            let m = |a: &[[VolumeField; 3]; 3], r: usize, c: usize| a[r][c].values()[p];
            for r in 0..3 {
                for col in 0..3 {
                    let s: f64 = (0..3).map(|k| m(&geo.a, r, k) * m(&geo.a_inv, k, col)).sum();
                    let e = if r == col { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-10);
                }
            }
            let j = &geo.a_inv;
            let det = m(j, 0, 0) * (m(j, 1, 1) * m(j, 2, 2) - m(j, 1, 2) * m(j, 2, 1))
                - m(j, 0, 1) * (m(j, 1, 0) * m(j, 2, 2) - m(j, 1, 2) * m(j, 2, 0))
                + m(j, 0, 2) * (m(j, 1, 0) * m(j, 2, 1) - m(j, 1, 1) * m(j, 2, 0));
            assert!((det - geo.d3phi().values()[p]).abs() < 1e-14);
            assert!(geo.dt_phi.values()[p].abs() <= psi_t.sup());
        }
        assert!(geo.norm_n.values().iter().all(|&x| x >= 1.0));
        assert!(geo.dphi[0].bottom().sup() == 0.0 && geo.dt_phi.bottom().sup() == 0.0);
        assert!(geo.d3phi().top().values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn curvature_linearizes_to_minus_laplacian() {
        let g = grid();
        let eps = 1e-6;
        let psi = SurfaceField::from_fn(&g, |x, _| eps * x.cos());
        let h = mean_curvature(&g, &psi);
        // ℋ_lin = −Δ̄ψ = ε cos x₁
        let lin = SurfaceField::from_fn(&g, |x, _| eps * x.cos());
        let err = (&h - &lin).sup();
        assert!(err < 10.0 * eps.powi(3));

        let big = SurfaceField::from_fn(&g, |x, y| 0.3 * (x + y).sin() + 0.2 * (2.0 * y).cos());
        assert!(g.integrate(&mean_curvature(&g, &big)).abs() < 1e-10);
    }
}
