use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tensor-product discretization of the slab `T² × [-b, 0]`.
///
/// Tangential directions are Fourier-collocated on a uniform `nx × ny` grid
/// over `[0, 2π)²`; the vertical direction uses `nz` Chebyshev–Lobatto nodes
/// mapped affinely onto `[-b, 0]`, ordered from the top (`x₃ = 0`, index 0)
/// to the bottom (`x₃ = -b`, index `nz - 1`).
///
/// Volume data is stored slab by slab: index `(k * ny + j) * nx + i`, with
/// `k` the vertical level, `j` the `x₂` index and `i` the `x₁` index.
#[derive(Clone)]
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
    b: f64,
    k1: Vec<i64>,
    k2: Vec<i64>,
    nodes: Vec<f64>,
    cheb_diff: Vec<f64>,
    vertical_weights: Vec<f64>,
    dealias_mask: Vec<bool>,
    plans: Arc<FftPlans>,
    derivative_fault: f64,
}

struct FftPlans {
    fx: Arc<dyn Fft<f64>>,
    fx_inv: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    fy_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("b", &self.b)
            .finish()
    }
}

/// Tangential axis selector for `∂₁` / `∂₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Grid {
    /// Build a grid. `nx`, `ny` must be even and at least 8, `nz` at least 8
    /// and `b` positive.
    pub fn new(nx: usize, ny: usize, nz: usize, b: f64) -> Result<Self> {
        if nx < 8 || ny < 8 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "tangential sizes must be even and >= 8, got {nx} x {ny}"
            )));
        }
        if nz < 8 {
            return Err(Error::InvalidGrid(format!(
                "vertical size must be >= 8, got {nz}"
            )));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidGrid(format!("depth must be positive, got {b}")));
        }

        let k1 = signed_wavenumbers(nx);
        let k2 = signed_wavenumbers(ny);

        let n = nz - 1;
        // sin form keeps the node set exactly symmetric with exact endpoints
        let s: Vec<f64> = (0..nz)
            .map(|j| (PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64)).sin())
            .collect();
        let nodes: Vec<f64> = s.iter().map(|&sj| 0.5 * b * (sj - 1.0)).collect();

        let mut cheb_diff = chebyshev_matrix(&s);
        for d in cheb_diff.iter_mut() {
            *d *= 2.0 / b;
        }
        let vertical_weights: Vec<f64> = clenshaw_curtis(n).into_iter().map(|w| 0.5 * b * w).collect();

        let mut dealias_mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                dealias_mask[j * nx + i] =
                    3 * k1[i].unsigned_abs() as usize >= nx || 3 * k2[j].unsigned_abs() as usize >= ny;
            }
        }

        let mut planner = FftPlanner::<f64>::new();
        let plans = FftPlans {
            fx: planner.plan_fft_forward(nx),
            fx_inv: planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            fy_inv: planner.plan_fft_inverse(ny),
        };

        Ok(Self {
            nx,
            ny,
            nz,
            b,
            k1,
            k2,
            nodes,
            cheb_diff,
            vertical_weights,
            dealias_mask,
            plans: Arc::new(plans),
            derivative_fault: 0.0,
        })
    }

    /// Test hook: scale every tangential derivative symbol by `1 + rel` per order,
    /// so identity checks can be shown to catch a corrupted operator.
    #[doc(hidden)]
    pub fn with_derivative_fault(mut self, rel: f64) -> Self {
        self.derivative_fault = rel;
        self
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
    pub fn depth(&self) -> f64 {
        self.b
    }
    pub fn surface_len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn volume_len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Signed integer wavenumbers along `x₁`, in FFT order.
    pub fn wavenumbers_x1(&self) -> &[i64] {
        &self.k1
    }
    pub fn wavenumbers_x2(&self) -> &[i64] {
        &self.k2
    }

    /// Vertical Lobatto nodes, strictly decreasing from `0` to `-b`.
    pub fn chebyshev_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Vertical differentiation matrix (row-major, `nz × nz`) on the mapped nodes.
    pub fn chebyshev_diff(&self) -> &[f64] {
        &self.cheb_diff
    }

    pub fn x1(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.nx as f64
    }
    pub fn x2(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ny as f64
    }
    pub fn dx(&self) -> f64 {
        (2.0 * PI / self.nx as f64).min(2.0 * PI / self.ny as f64)
    }
    /// Smallest vertical node spacing.
    pub fn dz_min(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }

    /// Uniform tangential quadrature weight; exact for resolved trigonometric data.
    pub fn surface_weight(&self) -> f64 {
        4.0 * PI * PI / (self.nx * self.ny) as f64
    }
    pub fn surface_quad_weights(&self) -> Vec<f64> {
        vec![self.surface_weight(); self.surface_len()]
    }
    /// Clenshaw–Curtis weights on `[-b, 0]`.
    pub fn vertical_weights(&self) -> &[f64] {
        &self.vertical_weights
    }
    pub fn volume_quad_weights(&self) -> Vec<f64> {
        let sw = self.surface_weight();
        let mut w = Vec::with_capacity(self.volume_len());
        for k in 0..self.nz {
            w.extend(std::iter::repeat_n(sw * self.vertical_weights[k], self.surface_len()));
        }
        w
    }

    /// `true` for tangential modes removed by the 2/3 rule (`3|k| >= n` in either direction).
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    pub fn is_nyquist(&self, i: usize, j: usize) -> bool {
        2 * i == self.nx || 2 * j == self.ny
    }

    /// Fourier symbol of `∂₁^a ∂₂^b` at mode `(i, j)`. Odd derivatives vanish on
    /// Nyquist modes so that real data stays real.
    pub fn tangential_symbol(&self, i: usize, j: usize, a: u32, b: u32) -> Complex64 {
        axis_symbol(self.k1[i], 2 * i == self.nx, a, self.derivative_fault)
            * axis_symbol(self.k2[j], 2 * j == self.ny, b, self.derivative_fault)
    }

    /// Forward 2D DFT of every `nx × ny` slab in `data`.
    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let m = self.surface_len();
        assert!(data.len().is_multiple_of(m), "data is not a whole number of slabs");
        let mut out: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        out.par_chunks_mut(m).for_each(|slab| {
            self.fft2(slab, true);
        });
        out
    }

    /// Inverse of [`Grid::forward`], returning the real part.
    pub fn inverse(&self, mut coef: Vec<Complex64>) -> Vec<f64> {
        let m = self.surface_len();
        assert!(coef.len().is_multiple_of(m), "data is not a whole number of slabs");
        let scale = 1.0 / m as f64;
        coef.par_chunks_mut(m).for_each(|slab| {
            self.fft2(slab, false);
        });
        coef.into_iter().map(|z| z.re * scale).collect()
    }

    fn fft2(&self, slab: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let (fx, fy) = if forward {
            (&self.plans.fx, &self.plans.fy)
        } else {
            (&self.plans.fx_inv, &self.plans.fy_inv)
        };
        fx.process(slab);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                t[i * ny + j] = slab[j * nx + i];
            }
        }
        fy.process(&mut t);
        for j in 0..ny {
            for i in 0..nx {
                slab[j * nx + i] = t[i * ny + j];
            }
        }
    }

    /// Apply `∂₁^a ∂₂^b` slab-wise in spectral space.
    pub fn tangential_derivative(&self, data: &[f64], a: u32, b: u32) -> Vec<f64> {
        if a == 0 && b == 0 {
            return data.to_vec();
        }
        let coef = self.forward(data);
        let mut out = self.inverse(self.apply_symbol(&coef, a, b));
        self.zero_constant_slabs(data, &mut out);
        out
    }

    /// Several tangential derivatives of the same data sharing one forward transform.
    pub fn tangential_derivatives(&self, data: &[f64], orders: &[(u32, u32)]) -> Vec<Vec<f64>> {
        let coef = self.forward(data);
        orders
            .iter()
            .map(|&(a, b)| {
                if a == 0 && b == 0 {
                    data.to_vec()
                } else {
                    let mut out = self.inverse(self.apply_symbol(&coef, a, b));
                    self.zero_constant_slabs(data, &mut out);
                    out
                }
            })
            .collect()
    }

    /// Slabs that are constant in `data` have exactly zero tangential derivatives.
    fn zero_constant_slabs(&self, data: &[f64], out: &mut [f64]) {
        let m = self.surface_len();
        for (slab, o) in data.chunks(m).zip(out.chunks_mut(m)) {
            if slab.iter().all(|&x| x == slab[0]) {
                o.fill(0.0);
            }
        }
    }

    pub(crate) fn apply_symbol(&self, coef: &[Complex64], a: u32, b: u32) -> Vec<Complex64> {
        let m = self.surface_len();
        let symbols: Vec<Complex64> = (0..m)
            .map(|idx| self.tangential_symbol(idx % self.nx, idx / self.nx, a, b))
            .collect();
        coef.iter()
            .enumerate()
            .map(|(idx, &z)| z * symbols[idx % m])
            .collect()
    }

    /// Apply the vertical collocation derivative `order` times to volume data.
    pub fn vertical_derivative(&self, data: &[f64], order: u32) -> Vec<f64> {
        let mut cur = data.to_vec();
        for _ in 0..order {
            cur = self.apply_vertical(&cur, &self.cheb_diff);
        }
        cur
    }

    fn apply_vertical(&self, data: &[f64], mat: &[f64]) -> Vec<f64> {
        let m = self.surface_len();
        let nz = self.nz;
        assert_eq!(data.len(), m * nz, "vertical derivative needs volume data");
        let mut out = vec![0.0; m * nz];
        // rows sum to zero, so differencing against the diagonal node keeps
        // constants exactly in the kernel
        out.par_chunks_mut(m).enumerate().for_each(|(k, row)| {
            let base = &data[k * m..(k + 1) * m];
            for l in 0..nz {
                let d = mat[k * nz + l];
                if l == k || d == 0.0 {
                    continue;
                }
                let src = &data[l * m..(l + 1) * m];
                for ((o, s), b) in row.iter_mut().zip(src).zip(base) {
                    *o += d * (s - b);
                }
            }
        });
        out
    }

    /// Zero the modes removed by the 2/3 rule.
    pub fn dealias(&self, data: &[f64]) -> Vec<f64> {
        let m = self.surface_len();
        let mut coef = self.forward(data);
        for (idx, z) in coef.iter_mut().enumerate() {
            if self.dealias_mask[idx % m] {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(coef)
    }

    /// Discard Nyquist modes, the one part of the tangential spectrum on which
    /// first derivatives are not invertible.
    pub fn remove_nyquist(&self, data: &[f64]) -> Vec<f64> {
        let m = self.surface_len();
        let mut coef = self.forward(data);
        for (idx, z) in coef.iter_mut().enumerate() {
            let r = idx % m;
            if self.is_nyquist(r % self.nx, r / self.nx) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(coef)
    }

    /// Quadrature of surface data over `T²`.
    pub fn integrate_surface(&self, data: &[f64]) -> f64 {
        assert_eq!(data.len(), self.surface_len());
        self.surface_weight() * data.iter().sum::<f64>()
    }

    /// Quadrature of volume data over the slab.
    pub fn integrate_volume(&self, data: &[f64]) -> f64 {
        let m = self.surface_len();
        assert_eq!(data.len(), self.volume_len());
        let sw = self.surface_weight();
        data.chunks(m)
            .zip(&self.vertical_weights)
            .map(|(slab, w)| w * slab.iter().sum::<f64>())
            .sum::<f64>()
            * sw
    }
}

fn signed_wavenumbers(n: usize) -> Vec<i64> {
    (0..n)
        .map(|i| if 2 * i <= n { i as i64 } else { i as i64 - n as i64 })
        .collect()
}

fn axis_symbol(k: i64, nyquist: bool, order: u32, fault: f64) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if nyquist && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let ik = Complex64::new(0.0, k as f64 * (1.0 + fault));
    ik.powu(order)
}

/// Chebyshev collocation differentiation matrix on the nodes `s` (in `[-1, 1]`,
/// descending), row-major. Diagonal entries use the negative-sum identity.
fn chebyshev_matrix(s: &[f64]) -> Vec<f64> {
    let np = s.len();
    let n = np - 1;
    let c: Vec<f64> = (0..np)
        .map(|j| {
            let base = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 { base } else { -base }
        })
        .collect();
    let mut d = vec![0.0; np * np];
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let v = (c[i] / c[j]) / (s[i] - s[j]);
                d[i * np + j] = v;
                row_sum += v;
            }
        }
        d[i * np + i] = -row_sum;
    }
    d
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the nodes `cos(πj/n)`, `j = 0..=n`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
    let interior: Vec<usize> = (1..n).collect();
    let mut v = vec![1.0; interior.len()];
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (n * n - 1) as f64;
        w[n] = w[0];
        for k in 1..n / 2 {
            let denom = (4 * k * k - 1) as f64;
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / denom;
            }
        }
        for (vi, &j) in v.iter_mut().zip(&interior) {
            *vi -= (n as f64 * theta[j]).cos() / (n * n - 1) as f64;
        }
    } else {
        w[0] = 1.0 / (n * n) as f64;
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let denom = (4 * k * k - 1) as f64;
            for (vi, &j) in v.iter_mut().zip(&interior) {
                *vi -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / denom;
            }
        }
    }
    for (vi, &j) in v.iter().zip(&interior) {
        w[j] = 2.0 * vi / n as f64;
    }
    w
}
