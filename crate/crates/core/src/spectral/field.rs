use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Nodal data that shares the tangential layout of a [`Grid`].
pub trait GridData: Clone {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
    /// Same shape, new values.
    fn with_values(&self, values: Vec<f64>) -> Self;
    /// Validate that the shape fits `grid`.
    fn check_shape(&self, grid: &Grid) -> Result<()>;
}

/// Real field on the top boundary `T²`, `values[j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

/// Real field on the slab, `values[(k * ny + j) * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    nx: usize,
    ny: usize,
    nz: usize,
    values: Vec<f64>,
}

/// Three-component vector field on the slab.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField(pub [VolumeField; 3]);

impl SurfaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), values: vec![c; grid.surface_len()] }
    }

    pub fn constant_like(other: &Self, c: f64) -> Self {
        other.with_values(vec![c; other.values.len()])
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.surface_len() {
            return Err(Error::ShapeMismatch(format!(
                "surface field needs {} values, got {}",
                grid.surface_len(),
                values.len()
            )));
        }
        Ok(Self { nx: grid.nx(), ny: grid.ny(), values })
    }

    /// Sample `f(x₁, x₂)` at the collocation points.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.surface_len());
        for j in 0..grid.ny() {
            let x2 = grid.x2(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x1(i), x2));
            }
        }
        Self { nx: grid.nx(), ny: grid.ny(), values }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "surface field shape mismatch");
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn sup(&self) -> f64 {
        sup_abs(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl VolumeField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { nx: grid.nx(), ny: grid.ny(), nz: grid.nz(), values: vec![c; grid.volume_len()] }
    }

    pub fn constant_like(other: &Self, c: f64) -> Self {
        other.with_values(vec![c; other.values.len()])
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.volume_len() {
            return Err(Error::ShapeMismatch(format!(
                "volume field needs {} values, got {}",
                grid.volume_len(),
                values.len()
            )));
        }
        Ok(Self { nx: grid.nx(), ny: grid.ny(), nz: grid.nz(), values })
    }

    /// Sample `f(x₁, x₂, x₃)` at the collocation points.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.volume_len());
        for &x3 in grid.chebyshev_nodes() {
            for j in 0..grid.ny() {
                let x2 = grid.x2(j);
                for i in 0..grid.nx() {
                    values.push(f(grid.x1(i), x2, x3));
                }
            }
        }
        Self { nx: grid.nx(), ny: grid.ny(), nz: grid.nz(), values }
    }

    /// Extend a surface field constantly in `x₃`.
    pub fn broadcast(s: &SurfaceField, nz: usize) -> Self {
        let mut values = Vec::with_capacity(s.values.len() * nz);
        for _ in 0..nz {
            values.extend_from_slice(&s.values);
        }
        Self { nx: s.nx, ny: s.ny, nz, values }
    }

    /// `profile[k] * s(x')` on level `k`.
    pub fn outer(profile: &[f64], s: &SurfaceField) -> Self {
        let mut values = Vec::with_capacity(s.values.len() * profile.len());
        for &p in profile {
            values.extend(s.values.iter().map(|&x| p * x));
        }
        Self { nx: s.nx, ny: s.ny, nz: profile.len(), values }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn level(&self, k: usize) -> SurfaceField {
        let m = self.nx * self.ny;
        SurfaceField { nx: self.nx, ny: self.ny, values: self.values[k * m..(k + 1) * m].to_vec() }
    }

    pub fn set_level(&mut self, k: usize, s: &SurfaceField) {
        let m = self.nx * self.ny;
        self.values[k * m..(k + 1) * m].copy_from_slice(&s.values);
    }

    /// Trace on the top boundary (node 0).
    pub fn top(&self) -> SurfaceField {
        self.level(0)
    }

    /// Trace on the bottom boundary (node `nz - 1`).
    pub fn bottom(&self) -> SurfaceField {
        self.level(self.nz - 1)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "volume field shape mismatch");
        self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Multiply level `k` pointwise by `s`.
    pub fn mul_surface(&self, s: &SurfaceField) -> Self {
        let m = self.nx * self.ny;
        assert_eq!(s.values.len(), m, "surface/volume shape mismatch");
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &x)| x * s.values[idx % m])
            .collect();
        self.with_values(values)
    }

    /// Multiply level `k` by `profile[k]`.
    pub fn mul_profile(&self, profile: &[f64]) -> Self {
        let m = self.nx * self.ny;
        assert_eq!(profile.len(), self.nz, "profile length mismatch");
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &x)| x * profile[idx / m])
            .collect();
        self.with_values(values)
    }

    pub fn sup(&self) -> f64 {
        sup_abs(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self(std::array::from_fn(|_| VolumeField::zeros(grid)))
    }

    pub fn new(c0: VolumeField, c1: VolumeField, c2: VolumeField) -> Self {
        Self([c0, c1, c2])
    }

    pub fn component(&self, i: usize) -> &VolumeField {
        &self.0[i]
    }

    pub fn map(&self, f: impl Fn(&VolumeField) -> VolumeField) -> Self {
        Self(std::array::from_fn(|i| f(&self.0[i])))
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&VolumeField, &VolumeField) -> VolumeField) -> Self {
        Self(std::array::from_fn(|i| f(&self.0[i], &other.0[i])))
    }

    pub fn dot(&self, other: &Self) -> VolumeField {
        &(&(&self.0[0] * &other.0[0]) + &(&self.0[1] * &other.0[1])) + &(&self.0[2] * &other.0[2])
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> VolumeField {
        self.dot(self).map(f64::sqrt)
    }

    /// Surface traces of the three components at the top.
    pub fn top(&self) -> [SurfaceField; 3] {
        std::array::from_fn(|i| self.0[i].top())
    }

    pub fn bottom(&self) -> [SurfaceField; 3] {
        std::array::from_fn(|i| self.0[i].bottom())
    }

    pub fn sup(&self) -> f64 {
        self.magnitude().sup()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(VolumeField::is_finite)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|f| f * c)
    }
}

impl GridData for SurfaceField {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { nx: self.nx, ny: self.ny, values }
    }
    fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx() || self.ny != grid.ny() || self.values.len() != grid.surface_len() {
            return Err(Error::ShapeMismatch(format!(
                "surface field {}x{} on grid {}x{}",
                self.nx,
                self.ny,
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(())
    }
}

impl GridData for VolumeField {
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { nx: self.nx, ny: self.ny, nz: self.nz, values }
    }
    fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.nx != grid.nx() || self.ny != grid.ny() || self.nz != grid.nz() {
            return Err(Error::ShapeMismatch(format!(
                "volume field {}x{}x{} on grid {}x{}x{}",
                self.nx,
                self.ny,
                self.nz,
                grid.nx(),
                grid.ny(),
                grid.nz()
            )));
        }
        Ok(())
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

macro_rules! pointwise_ops {
    ($t:ty) => {
        impl Add for &$t {
            type Output = $t;
            fn add(self, rhs: Self) -> $t {
                self.zip_map(rhs, |a, b| a + b)
            }
        }
        impl Sub for &$t {
            type Output = $t;
            fn sub(self, rhs: Self) -> $t {
                self.zip_map(rhs, |a, b| a - b)
            }
        }
        impl Mul for &$t {
            type Output = $t;
            fn mul(self, rhs: Self) -> $t {
                self.zip_map(rhs, |a, b| a * b)
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, rhs: f64) -> $t {
                self.map(|a| a * rhs)
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                self.map(|a| -a)
            }
        }
        impl AddAssign<&$t> for $t {
            fn add_assign(&mut self, rhs: &$t) {
                assert_eq!(self.values.len(), rhs.values.len(), "shape mismatch");
                for (a, b) in self.values.iter_mut().zip(&rhs.values) {
                    *a += b;
                }
            }
        }
        impl SubAssign<&$t> for $t {
            fn sub_assign(&mut self, rhs: &$t) {
                assert_eq!(self.values.len(), rhs.values.len(), "shape mismatch");
                for (a, b) in self.values.iter_mut().zip(&rhs.values) {
                    *a -= b;
                }
            }
        }
    };
}

pointwise_ops!(SurfaceField);
pointwise_ops!(VolumeField);

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_pick_boundary_levels() {
        let g = Grid::new(8, 8, 9, 2.0).unwrap();
        let f = VolumeField::from_fn(&g, |_, _, z| z);
        assert!(f.top().values().iter().all(|&x| x == 0.0));
        assert!(f.bottom().values().iter().all(|&x| x == -2.0));
    }

    #[test]
    fn from_values_checks_length() {
        let g = Grid::new(8, 8, 8, 1.0).unwrap();
        assert!(SurfaceField::from_values(&g, vec![0.0; 63]).is_err());
        assert!(VolumeField::from_values(&g, vec![0.0; 512]).is_ok());
    }
}
