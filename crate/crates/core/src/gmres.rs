//! Unrestarted GMRES with modified Gram-Schmidt and Givens rotations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmresConfig {
    /// Relative residual target `‖b − Ax‖/‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig { tol: 1e-12, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual estimated by the Arnoldi recurrence.
    pub residual: f64,
    pub converged: bool,
    /// Residual after each iteration.
    pub history: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `Ax = b` from `x₀ = 0`. `apply` may fail, in which case the error
/// is passed through.
pub fn gmres(mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>, b: &[f64], cfg: &GmresConfig) -> Result<GmresResult> {
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok(GmresResult { x: vec![0.0; n], iterations: 0, residual: 0.0, converged: true, history: vec![] });
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // columns of the rotated Hessenberg matrix
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut history = Vec::new();
    let mut residual = 1.0;
    for j in 0..cfg.max_iter.min(n) {
        let mut w = apply(&basis[j])?;
        if w.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: w.len() });
        }
        let mut col = Vec::with_capacity(j + 2);
        for v in &basis {
            let c = dot(&w, v);
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            col.push(c);
        }
        let hn = norm(&w);
        col.push(hn);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        let (a, b) = (col[j], col[j + 1]);
        let r = a.hypot(b);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
        col[j] = r;
        col[j + 1] = 0.0;
        rot.push((c, s));
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        residual = g[j + 1].abs() / beta;
        history.push(residual);
        if residual <= cfg.tol || hn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    let k = h.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|m| h[m][i] * y[m]).sum();
        y[i] = (g[i] - s) / h[i][i];
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yi * vi);
    }
    Ok(GmresResult { x, iterations: k, residual, converged: residual <= cfg.tol, history })
}
