//! Fourier–Chebyshev discretization of the slab, fields, derivatives and norms.

mod field;
mod grid;
mod norms;

pub use field::{GridData, SurfaceField, VectorField, VolumeField};
pub use grid::{Axis, Grid};
pub use norms::{
    boundary_sobolev_norm, holder_norms, interior_sobolev_norm, volume_holder_norms, HolderNorms,
};

use rustfft::num_complex::Complex64;

use crate::error::Result;

impl Grid {
    /// `∂₁^a ∂₂^b f` for surface or volume data.
    pub fn dtan<F: GridData>(&self, f: &F, a: u32, b: u32) -> F {
        f.with_values(self.tangential_derivative(f.values(), a, b))
    }

    pub fn d1<F: GridData>(&self, f: &F) -> F {
        self.dtan(f, 1, 0)
    }

    pub fn d2<F: GridData>(&self, f: &F) -> F {
        self.dtan(f, 0, 1)
    }

    /// `(∂₁f, ∂₂f)` from a single forward transform.
    pub fn grad_tan<F: GridData>(&self, f: &F) -> [F; 2] {
        let mut d = self.tangential_derivatives(f.values(), &[(1, 0), (0, 1)]);
        let d2 = d.pop().expect("two derivatives");
        let d1 = d.pop().expect("two derivatives");
        [f.with_values(d1), f.with_values(d2)]
    }

    /// Several tangential derivatives of `f` from a single forward transform.
    pub fn dtan_many<F: GridData>(&self, f: &F, orders: &[(u32, u32)]) -> Vec<F> {
        self.tangential_derivatives(f.values(), orders)
            .into_iter()
            .map(|v| f.with_values(v))
            .collect()
    }

    /// `∂₃ f` by Chebyshev collocation.
    pub fn d3(&self, f: &VolumeField) -> VolumeField {
        f.with_values(self.vertical_derivative(f.values(), 1))
    }

    pub fn d3n(&self, f: &VolumeField, order: u32) -> VolumeField {
        f.with_values(self.vertical_derivative(f.values(), order))
    }

    /// Shape-checked `∂_axis^order f`.
    pub fn deriv_tangential<F: GridData>(&self, f: &F, axis: Axis, order: u32) -> Result<F> {
        f.check_shape(self)?;
        Ok(match axis {
            Axis::X1 => self.dtan(f, order, 0),
            Axis::X2 => self.dtan(f, 0, order),
        })
    }

    /// Shape-checked `∂₃ f`.
    pub fn deriv_vertical(&self, f: &VolumeField) -> Result<VolumeField> {
        f.check_shape(self)?;
        Ok(self.d3(f))
    }

    /// Remove the top third of tangential modes.
    pub fn dealiased<F: GridData>(&self, f: &F) -> F {
        f.with_values(self.dealias(f.values()))
    }

    pub fn without_nyquist<F: GridData>(&self, f: &F) -> F {
        f.with_values(self.remove_nyquist(f.values()))
    }

    /// Dealiased pointwise product.
    pub fn product(&self, f: &VolumeField, g: &VolumeField) -> VolumeField {
        self.dealiased(&(f * g))
    }

    pub fn integrate(&self, f: &SurfaceField) -> f64 {
        self.integrate_surface(f.values())
    }

    pub fn integrate_vol(&self, f: &VolumeField) -> f64 {
        self.integrate_volume(f.values())
    }

    /// Unitary Fourier coefficients `(2π / (nx ny)) · DFT(f)`, so that
    /// `Σ |ĉ|² = ∫_{T²} |f|²`.
    pub fn unitary_coefficients(&self, f: &SurfaceField) -> Vec<Complex64> {
        let scale = 2.0 * std::f64::consts::PI / self.surface_len() as f64;
        self.forward(f.values()).into_iter().map(|z| z * scale).collect()
    }

    /// Inverse of [`Grid::unitary_coefficients`].
    pub fn from_unitary_coefficients(&self, c: Vec<Complex64>) -> SurfaceField {
        let scale = self.surface_len() as f64 / (2.0 * std::f64::consts::PI);
        let values = self.inverse(c.into_iter().map(|z| z * scale).collect());
        SurfaceField::from_values(self, values).expect("surface length")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn max_diff<F: GridData>(a: &F, b: &F) -> f64 {
        a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn tangential_derivatives_of_trig_modes() {
        let g = Grid::new(16, 16, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, |x, _| x.cos());
        let d = g.deriv_tangential(&f, Axis::X1, 1).unwrap();
        assert!(max_diff(&d, &SurfaceField::from_fn(&g, |x, _| -x.sin())) < 1e-12);

        let c = SurfaceField::constant(&g, 3.5);
        assert!(g.d2(&c).values().iter().all(|&x| x == 0.0));

        let h = SurfaceField::from_fn(&g, |x, y| (2.0 * x + y).sin());
        let d11 = g.deriv_tangential(&h, Axis::X1, 2).unwrap();
        // symbolic: ∂₁² sin(2x₁+x₂) = -4 sin(2x₁+x₂)
        let oracle = SurfaceField::from_fn(&g, |x, y| -4.0 * (2.0 * x + y).sin());
        assert!(max_diff(&d11, &oracle) < 1e-11);
    }

    #[test]
    fn vertical_derivative_is_exact_on_polynomials() {
        let g = Grid::new(8, 8, 9, 10.0).unwrap();
        let f = VolumeField::from_fn(&g, |_, _, z| z);
        assert!(g.d3(&f).values().iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let c = VolumeField::from_fn(&g, |x, y, _| x.sin() + y.cos());
        assert!(g.d3(&c).sup() < 1e-12);
        let cube = VolumeField::from_fn(&g, |_, _, z| z * z * z);
        // symbolic: ∂₃ x₃³ = 3 x₃²
        let oracle = VolumeField::from_fn(&g, |_, _, z| 3.0 * z * z);
        assert!(max_diff(&g.d3(&cube), &oracle) < 1e-10);
    }

    #[test]
    fn derivatives_commute() {
        let g = Grid::new(16, 12, 10, 2.0).unwrap();
        let f = VolumeField::from_fn(&g, |x, y, z| (x + 2.0 * y).sin() * (0.7 * z).exp() + (x - y).cos() * z * z);
        let a = g.d2(&g.d1(&f));
        let b = g.d1(&g.d2(&f));
        assert!(max_diff(&a, &b) < 1e-13);
        assert_eq!(g.dtan(&f, 1, 1), g.dtan(&f, 1, 1));
        let c = g.d3(&g.d1(&f));
        let d = g.d1(&g.d3(&f));
        assert!(max_diff(&c, &d) < 1e-10);
    }

    #[test]
    fn dealias_is_idempotent_and_kills_top_modes() {
        let g = Grid::new(16, 16, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, |x, y| (7.0 * x).cos() + y.sin() + 0.5 + (5.0 * x + 6.0 * y).sin());
        let once = g.dealiased(&f);
        let twice = g.dealiased(&once);
        assert!(max_diff(&once, &twice) < 1e-14);
        let keep = SurfaceField::from_fn(&g, |_, y| y.sin() + 0.5);
        assert!(max_diff(&once, &keep) < 1e-13);

        let c = SurfaceField::constant(&g, 2.0);
        assert!(max_diff(&g.dealiased(&c), &c) < 1e-15);
        let nyq = SurfaceField::from_fn(&g, |x, _| (8.0 * x).cos());
        assert!(g.dealiased(&nyq).sup() < 1e-14);
    }

    #[test]
    fn spectral_round_trip() {
        let g = Grid::new(16, 8, 9, 3.0).unwrap();
        let f = VolumeField::from_fn(&g, |x, y, z| (x * y).sin() + z.exp() * (3.0 * x).cos());
        let back = g.inverse(g.forward(f.values()));
        let rel = max_diff(&f.with_values(back), &f) / f.sup();
        assert!(rel < 1e-12);
        let s = f.top();
        let s2 = g.from_unitary_coefficients(g.unitary_coefficients(&s));
        assert!(max_diff(&s, &s2) < 1e-12 * s.sup());
    }

    #[test]
    fn surface_integral_of_cos_squared() {
        let g = Grid::new(16, 16, 8, 1.0).unwrap();
        let f = SurfaceField::from_fn(&g, |x, _| x.cos().powi(2));
        // Riemann sum oracle at 10^6 points
        let n = 1000;
        let h = 2.0 * PI / n as f64;
        let oracle: f64 = (0..n * n).map(|idx| ((idx % n) as f64 * h).cos().powi(2) * h * h).sum();
        assert_abs_diff_eq!(g.integrate(&f), oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(g.integrate(&f), 2.0 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn volume_integral_of_constant() {
        let g = Grid::new(16, 16, 9, 10.0).unwrap();
        let one = VolumeField::constant(&g, 1.0);
        assert_abs_diff_eq!(g.integrate_vol(&one), 4.0 * PI * PI * 10.0, epsilon = 1e-12 * 400.0);
    }
}
