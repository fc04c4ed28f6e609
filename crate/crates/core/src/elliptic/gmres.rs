//! Restarted, left-preconditioned GMRES with modified Gram–Schmidt.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final preconditioned residual relative to the preconditioned right-hand side.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `M⁻¹ A x = M⁻¹ b` starting from `x`. `apply` is `A`, `precond` is `M⁻¹`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iters: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let pb = precond(b);
    let bnorm = norm(&pb);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome { iterations: 0, relative_residual: 0.0 });
    }
    let m = restart.max(1);
    let mut iterations = 0;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut z = precond(&r);
        let beta = norm(&z);
        let mut rel = beta / bnorm;
        if rel <= tol {
            return Ok(GmresOutcome { iterations, relative_residual: rel });
        }
        if iterations >= max_iters {
            return Err(Error::NonConvergence { iterations, residual: rel });
        }
        z.iter_mut().for_each(|v| *v /= beta);
        let mut basis: Vec<Vec<f64>> = vec![z];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let mut w = precond(&apply(&basis[j]));
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            iterations += 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= tol || hn == 0.0 || iterations >= max_iters {
                break;
            }
            w.iter_mut().for_each(|v| *v /= hn);
            basis.push(w);
        }
        // back substitution on the triangular system
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for idx in 0..n {
                x[idx] += yk * basis[k][idx];
            }
        }
        if !rel.is_finite() {
            return Err(Error::NonConvergence { iterations, residual: rel });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 30;
        let a = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut s = 4.0 * x[i];
                    if i > 0 {
                        s -= 1.5 * x[i - 1];
                    }
                    if i + 1 < n {
                        s -= 0.5 * x[i + 1];
                    }
                    s
                })
                .collect()
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a(&truth);
        let mut x = vec![0.0; n];
        let out = gmres(a, |r| r.to_vec(), &b, &mut x, 1e-12, 7, 500).unwrap();
        assert!(out.relative_residual <= 1e-12);
        let err = x.iter().zip(&truth).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-10);
    }

    #[test]
    fn reports_nonconvergence() {
        let a = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).collect() };
        let b = vec![1.0; 50];
        let mut x = vec![0.0; 50];
        let err = gmres(a, |r| r.to_vec(), &b, &mut x, 1e-14, 3, 6).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 6, .. }));
    }
}
