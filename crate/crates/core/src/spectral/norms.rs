use super::{Grid, SurfaceField, VolumeField};

/// Discrete `C^k` proxy and related sup norms of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderNorms {
    /// `Σ_{|γ| ≤ k} sup |∂^γ f|` over grid nodes.
    pub ck: f64,
    /// `sup |f|`.
    pub sup: f64,
    /// `sup |f| + Σ_{|γ| = 1} sup |∂^γ f|`.
    pub w1inf: f64,
}

/// `(Σ_k (1 + |k|²)^s |f̂_k|²)^{1/2}` with unitary coefficients.
pub fn boundary_sobolev_norm(grid: &Grid, f: &SurfaceField, s: f64) -> f64 {
    let c = grid.unitary_coefficients(f);
    let (k1, k2) = (grid.wavenumbers_x1(), grid.wavenumbers_x2());
    let nx = grid.nx();
    c.iter()
        .enumerate()
        .map(|(idx, z)| {
            let kk = (k1[idx % nx] * k1[idx % nx] + k2[idx / nx] * k2[idx / nx]) as f64;
            (1.0 + kk).powf(s) * z.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_{|γ| ≤ s} ‖∂^γ f‖₀²)^{1/2}` over all mixed derivatives including `∂₃`.
///
/// Tangential parts use Parseval slab by slab, vertical parts the collocation
/// derivative and Clenshaw–Curtis quadrature.
pub fn interior_sobolev_norm(grid: &Grid, f: &VolumeField, s: u32) -> f64 {
    let m = grid.surface_len();
    let nx = grid.nx();
    let mut total = 0.0;
    let mut vert = f.values().to_vec();
    for c in 0..=s {
        if c > 0 {
            vert = grid.vertical_derivative(&vert, 1);
        }
        let coef = grid.forward(&vert);
        let unitary = (2.0 * std::f64::consts::PI / m as f64).powi(2);
        for ab in 0..=(s - c) {
            for a in 0..=ab {
                let b = ab - a;
                let sym: Vec<f64> = (0..m)
                    .map(|idx| grid.tangential_symbol(idx % nx, idx / nx, a, b).norm_sqr())
                    .collect();
                for (k, w) in grid.vertical_weights().iter().enumerate() {
                    let slab = &coef[k * m..(k + 1) * m];
                    let e: f64 = slab.iter().zip(&sym).map(|(z, s)| s * z.norm_sqr()).sum();
                    total += w * unitary * e;
                }
            }
        }
    }
    total.sqrt()
}

/// Tangential `C^k` proxy of a surface field.
pub fn holder_norms(grid: &Grid, f: &SurfaceField, k: u32) -> HolderNorms {
    let orders: Vec<(u32, u32)> = (0..=k).flat_map(|n| (0..=n).map(move |a| (a, n - a))).collect();
    let d = grid.dtan_many(f, &orders);
    collect_sups(orders.iter().map(|&(a, b)| a + b), d.iter().map(|x| x.sup()))
}

/// `C^k` proxy of a volume field over all mixed derivatives including `∂₃`.
pub fn volume_holder_norms(grid: &Grid, f: &VolumeField, k: u32) -> HolderNorms {
    let mut orders = Vec::new();
    let mut sups = Vec::new();
    let mut vert = f.clone();
    for c in 0..=k {
        if c > 0 {
            vert = grid.d3(&vert);
        }
        let tan: Vec<(u32, u32)> =
            (0..=(k - c)).flat_map(|n| (0..=n).map(move |a| (a, n - a))).collect();
        for (d, &(a, b)) in grid.dtan_many(&vert, &tan).iter().zip(&tan) {
            orders.push(a + b + c);
            sups.push(d.sup());
        }
    }
    collect_sups(orders.into_iter(), sups.into_iter())
}

fn collect_sups(orders: impl Iterator<Item = u32>, sups: impl Iterator<Item = f64>) -> HolderNorms {
    let mut out = HolderNorms { ck: 0.0, sup: 0.0, w1inf: 0.0 };
    for (o, s) in orders.zip(sups) {
        out.ck += s;
        if o == 0 {
            out.sup = s;
        }
        if o <= 1 {
            out.w1inf += s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn boundary_norm_values() {
        let g = Grid::new(16, 16, 8, 10.0).unwrap();
        assert_eq!(boundary_sobolev_norm(&g, &SurfaceField::zeros(&g), 2.5), 0.0);
        assert_abs_diff_eq!(
            boundary_sobolev_norm(&g, &SurfaceField::constant(&g, 1.0), 3.0),
            2.0 * PI,
            epsilon = 1e-12
        );
        let f = SurfaceField::from_fn(&g, |x, _| x.cos());
        // Parseval: ‖cos x₁‖₀² = 2π², weight (1+1)^1
        let oracle = (2.0f64 * 2.0 * PI * PI).sqrt();
        assert_abs_diff_eq!(boundary_sobolev_norm(&g, &f, 1.0), oracle, epsilon = 1e-12);
    }

    #[test]
    fn boundary_norm_is_monotone_in_s() {
        let g = Grid::new(16, 16, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, |x, y| (x + y).sin() + 0.3 * (3.0 * x).cos() + 0.1);
        let mut prev = 0.0;
        for i in 0..=12 {
            let n = boundary_sobolev_norm(&g, &f, 0.5 * i as f64);
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn interior_norm_values() {
        let b = 3.0;
        let g = Grid::new(16, 16, 9, b).unwrap();
        assert_eq!(interior_sobolev_norm(&g, &VolumeField::zeros(&g), 3), 0.0);
        assert_abs_diff_eq!(
            interior_sobolev_norm(&g, &VolumeField::constant(&g, 1.0), 0),
            (4.0 * PI * PI * b).sqrt(),
            epsilon = 1e-12
        );
        let f = VolumeField::from_fn(&g, |x, _, _| x.sin());
        // brute-force quadrature of sin² + cos²
        let q = |h: &VolumeField| g.integrate_vol(&(h * h));
        let oracle = q(&f) + q(&VolumeField::from_fn(&g, |x, _, _| x.cos()));
        assert_abs_diff_eq!(interior_sobolev_norm(&g, &f, 1).powi(2), oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(oracle, 4.0 * PI * PI * b, epsilon = 1e-10);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = Grid::new(16, 12, 11, 2.0).unwrap();
        let f = VolumeField::from_fn(&g, |x, y, z| (x + 2.0 * y).cos() * (1.0 + z * z) + (0.5 * z).sin());
        let direct = g.integrate_vol(&(&f * &f)).sqrt();
        assert_abs_diff_eq!(interior_sobolev_norm(&g, &f, 0), direct, epsilon = 1e-10);
    }

    #[test]
    fn holder_norm_values() {
        let g = Grid::new(16, 16, 8, 1.0).unwrap();
        let c = SurfaceField::constant(&g, -2.5);
        assert_abs_diff_eq!(holder_norms(&g, &c, 3).ck, 2.5, epsilon = 1e-14);
        let f = SurfaceField::from_fn(&g, |x, _| x.cos());
        // dense sampling oracle: sup|cos| + sup|sin| at 10^4 points
        let dense = (0..10_000).map(|i| {
            let x = 2.0 * PI * i as f64 / 10_000.0;
            (x.cos().abs(), x.sin().abs())
        });
        let (a, b) = dense.fold((0.0f64, 0.0f64), |(m0, m1), (c0, c1)| (m0.max(c0), m1.max(c1)));
        let h = holder_norms(&g, &f, 1);
        assert_abs_diff_eq!(h.ck, a + b, epsilon = 1e-12);
        assert_abs_diff_eq!(h.ck, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.w1inf, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_sup_never_exceeds_volume_sup() {
        let g = Grid::new(16, 16, 9, 2.0).unwrap();
        let f = VolumeField::from_fn(&g, |x, y, z| (x - y).sin() * (z + 0.3).exp());
        assert!(f.top().sup() <= f.sup());
        assert!(f.bottom().sup() <= f.sup());
        assert!(holder_norms(&g, &f.top(), 0).sup <= volume_holder_norms(&g, &f, 0).sup);
    }
}
