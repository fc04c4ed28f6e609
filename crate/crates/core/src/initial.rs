//! Named analytic families of initial data.
//!
//! Every family is a pure function of its parameters (and a seed where
//! random), so a configuration reproduces the same state bitwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::operators::curl_phi;
use crate::spectral::{Grid, SurfaceField, VectorField, VolumeField};

/// Surface elevation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceInit {
    Flat,
    /// `ε cos(k₁x₁ + k₂x₂)`.
    SingleMode {
        amplitude: f64,
        #[serde(default = "one")]
        k1: i64,
        #[serde(default)]
        k2: i64,
    },
}

/// Velocity families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityInit {
    Zero,
    /// Uniform horizontal flow `(c₁, c₂, 0)`.
    Rigid { c1: f64, c2: f64 },
    /// `curl_phi A` for a random vector potential with Gaussian spectral decay.
    RandomSolenoidal {
        seed: u64,
        amplitude: f64,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_kmax")]
        kmax: i64,
    },
    /// Depth-independent vortex with a periodic Gaussian stream function.
    ColumnarVortex {
        circulation: f64,
        radius: f64,
        #[serde(default = "pi")]
        x1: f64,
        #[serde(default = "pi")]
        x2: f64,
    },
}

fn one() -> i64 {
    1
}
fn default_decay() -> f64 {
    2.0
}
fn default_kmax() -> i64 {
    4
}
fn pi() -> f64 {
    std::f64::consts::PI
}

impl SurfaceInit {
    pub fn build(&self, grid: &Grid) -> Result<SurfaceField> {
        match *self {
            SurfaceInit::Flat => Ok(SurfaceField::zeros(grid)),
            SurfaceInit::SingleMode { amplitude, k1, k2 } => {
                let (kx, ky) = (k1.unsigned_abs() as usize, k2.unsigned_abs() as usize);
                if 2 * kx >= grid.nx() || 2 * ky >= grid.ny() || (k1 == 0 && k2 == 0) {
                    return Err(Error::InvalidArgument(format!(
                        "mode ({k1}, {k2}) is zero or not resolved on a {}x{} grid",
                        grid.nx(),
                        grid.ny()
                    )));
                }
                Ok(SurfaceField::from_fn(grid, |x, y| amplitude * (k1 as f64 * x + k2 as f64 * y).cos()))
            }
        }
    }
}

impl VelocityInit {
    /// Velocity on the flattened slab. Only the random family depends on the geometry.
    pub fn build(&self, grid: &Grid, geom: &GeometrySnapshot) -> Result<VectorField> {
        match *self {
            VelocityInit::Zero => Ok(VectorField::zeros(grid)),
            VelocityInit::Rigid { c1, c2 } => Ok(VectorField::new(
                VolumeField::constant(grid, c1),
                VolumeField::constant(grid, c2),
                VolumeField::zeros(grid),
            )),
            VelocityInit::RandomSolenoidal { seed, amplitude, decay, kmax } => {
                if !(decay > 0.0) || kmax < 1 {
                    return Err(Error::InvalidArgument(format!("need decay > 0 and kmax >= 1, got {decay}, {kmax}")));
                }
                let a = random_potential(grid, seed, decay, kmax);
                let v = curl_phi(grid, &a, geom)?;
                let s = v.sup();
                Ok(if s > 0.0 { v.scale(amplitude / s) } else { v })
            }
            VelocityInit::ColumnarVortex { circulation, radius, x1, x2 } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("vortex radius must be positive, got {radius}")));
                }
                // Ψ = Γ exp((cos(x₁−c₁) + cos(x₂−c₂) − 2)/r²), v = (−∂₂Ψ, ∂₁Ψ, 0)
                let r2 = radius * radius;
                let stream = |x: f64, y: f64| circulation * (((x - x1).cos() + (y - x2).cos() - 2.0) / r2).exp();
                let u1 = VolumeField::from_fn(grid, |x, y, _| stream(x, y) * (y - x2).sin() / r2);
                let u2 = VolumeField::from_fn(grid, |x, y, _| -stream(x, y) * (x - x1).sin() / r2);
                Ok(VectorField::new(u1, u2, VolumeField::zeros(grid)))
            }
        }
    }
}

/// Random smooth vector field with Gaussian spectral decay `exp(−|k|²/(2 decay²))`
/// for `|k₁|, |k₂| ≤ kmax`, times smooth random vertical profiles. The first two
/// components vanish at the bottom, so a curl of it has zero bottom flux.
pub fn random_potential(grid: &Grid, seed: u64, decay: f64, kmax: i64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = grid.depth();
    let kmax_x = kmax.min(grid.nx() as i64 / 2 - 1);
    let kmax_y = kmax.min(grid.ny() as i64 / 2 - 1);
    let mut modes = Vec::new();
    for k1 in -kmax_x..=kmax_x {
        for k2 in -kmax_y..=kmax_y {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let w = (-((k1 * k1 + k2 * k2) as f64) / (2.0 * decay * decay)).exp();
            let coef: [[f64; 4]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            modes.push((k1 as f64, k2 as f64, w, coef));
        }
    }
    let comp = |c: usize| {
        VolumeField::from_fn(grid, |x, y, z| {
            let s = z / b;
            let taper = if c < 2 { 1.0 + s } else { 1.0 };
            let mut acc = 0.0;
            for (k1, k2, w, coef) in &modes {
                let [p, q, r, t] = coef[c];
                let profile = r + t * (std::f64::consts::PI * s).cos();
                let th = k1 * x + k2 * y;
                acc += w * profile * (p * th.cos() + q * th.sin());
            }
            taper * acc
        })
    };
    VectorField::new(comp(0), comp(1), comp(2))
}

/// Random smooth (not solenoidal) field with zero bottom flux, for projection tests.
pub fn random_smooth_field(grid: &Grid, seed: u64, decay: f64, kmax: i64) -> VectorField {
    let p = random_potential(grid, seed, decay, kmax);
    let b = grid.depth();
    // rotate the components so the tapered ones land on v₃
    let v3 = p.0[0].clone();
    let taper = VolumeField::from_fn(grid, |_, _, z| 1.0 + z / b);
    VectorField::new(p.0[2].clone(), &p.0[1] * &taper, v3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CutoffProfile;
    use crate::operators::div_phi;

    fn flat(g: &Grid) -> GeometrySnapshot {
        let c = CutoffProfile::new(g, 0.0, g.depth(), 0.0).unwrap();
        GeometrySnapshot::lift(g, &SurfaceField::zeros(g), &SurfaceField::zeros(g), &c)
    }

    #[test]
    fn random_family_is_reproducible_and_tangent_at_bottom() {
        let g = Grid::new(16, 16, 12, 4.0).unwrap();
        let geo = flat(&g);
        let init = VelocityInit::RandomSolenoidal { seed: 7, amplitude: 0.5, decay: 2.0, kmax: 4 };
        let a = init.build(&g, &geo).unwrap();
        let b = init.build(&g, &geo).unwrap();
        assert_eq!(a.0[0].values(), b.0[0].values());
        assert!((a.sup() - 0.5).abs() < 1e-14);
        assert!(a.0[2].bottom().sup() < 1e-12);
        assert!(div_phi(&g, &a, &geo).unwrap().sup() < 1e-10);
        let other = VelocityInit::RandomSolenoidal { seed: 8, amplitude: 0.5, decay: 2.0, kmax: 4 };
        assert_ne!(other.build(&g, &geo).unwrap().0[0].values(), a.0[0].values());
    }

    #[test]
    fn vortex_is_divergence_free_and_columnar() {
        let g = Grid::new(32, 32, 9, 3.0).unwrap();
        let geo = flat(&g);
        let v = VelocityInit::ColumnarVortex { circulation: 1.0, radius: 0.7, x1: 3.0, x2: 3.0 }
            .build(&g, &geo)
            .unwrap();
        assert!(div_phi(&g, &v, &geo).unwrap().sup() < 1e-9);
        assert_eq!(v.0[0].top().values(), v.0[0].bottom().values());
        assert_eq!(v.0[2].sup(), 0.0);
    }

    #[test]
    fn single_mode_rejects_unresolved_wavenumber() {
        let g = Grid::new(8, 8, 8, 1.0).unwrap();
        assert!(SurfaceInit::SingleMode { amplitude: 0.1, k1: 4, k2: 0 }.build(&g).is_err());
        assert!(SurfaceInit::SingleMode { amplitude: 0.1, k1: 0, k2: 0 }.build(&g).is_err());
        let s = SurfaceInit::SingleMode { amplitude: 0.1, k1: 1, k2: 2 }.build(&g).unwrap();
        assert!((s.sup() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn families_parse_from_tagged_tables() {
        let v: VelocityInit = serde_json::from_str(r#"{"family":"rigid","c1":1.0,"c2":0.0}"#).unwrap();
        assert_eq!(v, VelocityInit::Rigid { c1: 1.0, c2: 0.0 });
        let s: SurfaceInit = serde_json::from_str(r#"{"family":"single_mode","amplitude":0.01}"#).unwrap();
        assert_eq!(s, SurfaceInit::SingleMode { amplitude: 0.01, k1: 1, k2: 0 });
    }
}
