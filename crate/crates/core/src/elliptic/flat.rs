//! Exact inverse of the flat-surface operator, mode by mode in the tangential
//! Fourier basis with dense vertical blocks.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::spectral::Grid;

/// Boundary condition imposed in the top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopRow {
    /// `u = g`.
    Dirichlet,
    /// `N·∂^φu = h`.
    Neumann,
}

/// Constraint fixing the additive constant of a pure Neumann problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gauge {
    /// Prescribed mean of the top trace.
    TopMean,
    /// Prescribed volume mean.
    VolumeMean,
}

type Block = Arc<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>;

/// Per-mode LU factors of the flat operator for one top condition.
pub struct FlatInverse {
    grid: Grid,
    top: TopRow,
    /// Factor per tangential mode, `None` on Nyquist modes (and on the zero
    /// mode of the pure Neumann problem, which is bordered instead).
    blocks: Vec<Option<Block>>,
    bordered: HashMap<Gauge, Block>,
}

impl FlatInverse {
    pub fn new(grid: &Grid, top: TopRow) -> Self {
        let nz = grid.nz();
        let d = DMatrix::from_row_slice(nz, nz, grid.chebyshev_diff());
        let d2 = &d * &d;
        let build = |kappa2: f64| -> DMatrix<f64> {
            let mut a = DMatrix::zeros(nz, nz);
            for k in 1..nz - 1 {
                for l in 0..nz {
                    a[(k, l)] = d2[(k, l)];
                }
                a[(k, k)] -= kappa2;
            }
            match top {
                TopRow::Dirichlet => a[(0, 0)] = 1.0,
                TopRow::Neumann => {
                    for l in 0..nz {
                        a[(0, l)] = d[(0, l)];
                    }
                }
            }
            for l in 0..nz {
                a[(nz - 1, l)] = d[(nz - 1, l)];
            }
            a
        };

        let (k1, k2) = (grid.wavenumbers_x1(), grid.wavenumbers_x2());
        let nx = grid.nx();
        let mut cache: HashMap<i64, Block> = HashMap::new();
        let mut blocks = Vec::with_capacity(grid.surface_len());
        for idx in 0..grid.surface_len() {
            let (i, j) = (idx % nx, idx / nx);
            let kk = k1[i] * k1[i] + k2[j] * k2[j];
            if grid.is_nyquist(i, j) || (kk == 0 && top == TopRow::Neumann) {
                blocks.push(None);
                continue;
            }
            let block = cache
                .entry(kk)
                .or_insert_with(|| Arc::new(build(kk as f64).lu()))
                .clone();
            blocks.push(Some(block));
        }

        let mut bordered = HashMap::new();
        if top == TopRow::Neumann {
            let base = build(0.0);
            for gauge in [Gauge::TopMean, Gauge::VolumeMean] {
                let mut a = DMatrix::zeros(nz + 1, nz + 1);
                a.view_mut((0, 0), (nz, nz)).copy_from(&base);
                a[(0, nz)] = -1.0;
                match gauge {
                    Gauge::TopMean => a[(nz, 0)] = 1.0,
                    Gauge::VolumeMean => {
                        for (l, w) in grid.vertical_weights().iter().enumerate() {
                            a[(nz, l)] = w / grid.depth();
                        }
                    }
                }
                bordered.insert(gauge, Arc::new(a.lu()));
            }
        }
        Self { grid: grid.clone(), top, blocks, bordered }
    }

    pub fn top(&self) -> TopRow {
        self.top
    }

    /// Apply the inverse to `r`. For the Neumann variant with a gauge, `border`
    /// carries the gauge value in and the flux-shift constant out.
    pub fn apply(&self, r: &[f64], gauge: Option<(Gauge, &mut f64)>) -> Vec<f64> {
        let g = &self.grid;
        let (m, nz) = (g.surface_len(), g.nz());
        let coef = g.forward(r);
        let scale = 1.0 / m as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); coef.len()];

        let cols: Vec<(usize, Vec<Complex64>)> = (0..m)
            .into_par_iter()
            .filter_map(|idx| {
                let lu = self.blocks[idx].as_ref()?;
                let mut rhs = DMatrix::<f64>::zeros(nz, 2);
                for k in 0..nz {
                    let z = coef[k * m + idx] * scale;
                    rhs[(k, 0)] = z.re;
                    rhs[(k, 1)] = z.im;
                }
                let sol = lu.solve(&rhs).expect("flat block is nonsingular");
                Some((idx, (0..nz).map(|k| Complex64::new(sol[(k, 0)], sol[(k, 1)]) * m as f64).collect()))
            })
            .collect();
        for (idx, col) in cols {
            for (k, z) in col.into_iter().enumerate() {
                out[k * m + idx] = z;
            }
        }

        if let Some((gauge, border)) = gauge {
            let lu = &self.bordered[&gauge];
            let mut rhs = DVector::<f64>::zeros(nz + 1);
            for k in 0..nz {
                rhs[k] = coef[k * m].re * scale;
            }
            rhs[nz] = *border;
            let sol = lu.solve(&rhs).expect("bordered block is nonsingular");
            for k in 0..nz {
                out[k * m] = Complex64::new(sol[k] * m as f64, 0.0);
            }
            *border = sol[nz];
        }
        g.inverse(out)
    }
}
