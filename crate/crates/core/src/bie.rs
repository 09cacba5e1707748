//! Nyström discretization of the boundary integral operators and solvers for
//! the interior/exterior Dirichlet/Neumann problems.
//!
//! Stokes unknowns are interleaved: entry `2j + c` is component `c` at node
//! `j`. Jump relations (exterior side is `+`):
//! Laplace `(D ± ½)τ = f`, `(D^T ∓ ½)τ = f`; Stokes `(𝒟^T ∓ ½)σ = g`,
//! `(𝒟 − ½)σ = g` inside and `(𝒟 + 𝒮 + ½)σ = g` outside.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{Side, TargetBatch};
use crate::curve::{Curve, Density};
use crate::error::{Error, Result};
use crate::laplace::{LaplaceEvaluator, PotentialResult, SlpOperator};
use crate::stokes::{StokesEvaluator, StokesVelocity};

/// Relative singular-value cutoff of the least-squares solve.
pub const RANK_TOL: f64 = 1e-12;
/// Largest accepted relative residual `‖Ax − g‖∞/‖g‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Laplace,
    Stokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Dirichlet,
    Neumann,
}

/// Layer potential representing the solution off the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    /// Double layer.
    D,
    /// Single layer.
    S,
    /// Sum of double and single layers.
    DPlusS,
}

/// A boundary value problem with its boundary data.
#[derive(Debug, Clone)]
pub struct BvpSpec {
    pub equation: Equation,
    pub condition: Condition,
    pub side: Side,
    pub curves: Vec<Curve>,
    /// One data set per curve: real for Laplace, vector for Stokes.
    pub data: Vec<Density>,
}

impl BvpSpec {
    pub fn single(equation: Equation, condition: Condition, side: Side, curve: Curve, data: Density) -> Self {
        BvpSpec { equation, condition, side, curves: vec![curve], data: vec![data] }
    }

    pub fn representation(&self) -> Representation {
        representation(self.equation, self.condition, self.side)
    }

    fn validate(&self) -> Result<()> {
        if self.curves.len() != self.data.len() || self.curves.is_empty() {
            return Err(Error::Unsupported("need one data set per curve".into()));
        }
        for (c, d) in self.curves.iter().zip(&self.data) {
            c.check_len(d.len())?;
            let ok = match self.equation {
                Equation::Laplace => d.as_real().is_some(),
                Equation::Stokes => d.as_vector().is_some(),
            };
            if !ok {
                return Err(Error::Unsupported("data kind does not match the equation".into()));
            }
        }
        Ok(())
    }
}

pub fn representation(equation: Equation, condition: Condition, side: Side) -> Representation {
    match (equation, condition, side) {
        (_, Condition::Neumann, _) => Representation::S,
        (Equation::Stokes, Condition::Dirichlet, Side::Exterior) => Representation::DPlusS,
        (_, Condition::Dirichlet, _) => Representation::D,
    }
}

/// Assembled linear system.
#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub representation: Representation,
}

fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Laplace double-layer operator `D`: `(1/2π)(r·n_j/ρ²)w_j`, `r = y_k − y_j`,
/// diagonal `−κ_k w_k/(4π)`.
pub fn laplace_dlp_matrix(curve: &Curve) -> DMatrix<f64> {
    let (y, n, w, k) = (curve.nodes(), curve.normals(), curve.weights(), curve.curvature());
    DMatrix::from_fn(curve.n(), curve.n(), |i, j| {
        if i == j {
            -k[i] * w[i] / (4.0 * PI)
        } else {
            let r = y[i] - y[j];
            dot(r, n[j]) / r.norm_sqr() * w[j] / (2.0 * PI)
        }
    })
}

/// Adjoint double-layer operator `D^T`: `−(1/2π)(r·n_k/ρ²)w_j`, same diagonal.
pub fn laplace_dlpt_matrix(curve: &Curve) -> DMatrix<f64> {
    let (y, n, w, k) = (curve.nodes(), curve.normals(), curve.weights(), curve.curvature());
    DMatrix::from_fn(curve.n(), curve.n(), |i, j| {
        if i == j {
            -k[i] * w[i] / (4.0 * PI)
        } else {
            let r = y[i] - y[j];
            -dot(r, n[i]) / r.norm_sqr() * w[j] / (2.0 * PI)
        }
    })
}

/// Fills a 2N×2N matrix from 2×2 blocks `f(k, j) = [[a, b], [c, d]]`.
fn block_matrix(n: usize, f: impl Fn(usize, usize) -> [[f64; 2]; 2] + Sync) -> DMatrix<f64> {
    let cols: Vec<[[f64; 2]; 2]> = (0..n * n).into_par_iter().map(|idx| f(idx % n, idx / n)).collect();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| cols[(c / 2) * n + r / 2][r % 2][c % 2])
}

fn tangent_diag(curve: &Curve, k: usize) -> [[f64; 2]; 2] {
    let t = curve.d_nodes()[k] / curve.speed()[k];
    let s = -curve.curvature()[k] / (2.0 * PI) * curve.weights()[k];
    [[s * t.re * t.re, s * t.re * t.im], [s * t.im * t.re, s * t.im * t.im]]
}

/// Stokes double-layer operator `𝒟`: `(1/π)(r·n_j)(r⊗r)/ρ⁴ w_j`, diagonal
/// `−(κ_k/2π)(t⊗t)w_k`.
pub fn stokes_dlp_matrix(curve: &Curve) -> DMatrix<f64> {
    let (y, n, w) = (curve.nodes(), curve.normals(), curve.weights());
    block_matrix(curve.n(), |k, j| {
        if k == j {
            return tangent_diag(curve, k);
        }
        let r = y[k] - y[j];
        let rho2 = r.norm_sqr();
        let s = dot(r, n[j]) / (PI * rho2 * rho2) * w[j];
        [[s * r.re * r.re, s * r.re * r.im], [s * r.im * r.re, s * r.im * r.im]]
    })
}

/// Traction of the single layer, `𝒟^T`: `−(1/π)(r·n_k)(r⊗r)/ρ⁴ w_j`, same
/// diagonal as `𝒟`.
pub fn stokes_dlpt_matrix(curve: &Curve) -> DMatrix<f64> {
    let (y, n, w) = (curve.nodes(), curve.normals(), curve.weights());
    block_matrix(curve.n(), |k, j| {
        if k == j {
            return tangent_diag(curve, k);
        }
        let r = y[k] - y[j];
        let rho2 = r.norm_sqr();
        let s = -dot(r, n[k]) / (PI * rho2 * rho2) * w[j];
        [[s * r.re * r.re, s * r.re * r.im], [s * r.im * r.re, s * r.im * r.im]]
    })
}

/// Stokes single-layer operator `𝒮`: the log part uses the Laplace
/// single-layer product weights, the smooth part `(r⊗r)/ρ² w_j/4π` the
/// trapezoid rule with diagonal `(t⊗t) w_k/4π`.
pub fn stokes_slp_matrix(curve: &Curve) -> DMatrix<f64> {
    let n = curve.n();
    let a = SlpOperator::new(curve).interior_matrix();
    let (y, w) = (curve.nodes(), curve.weights());
    block_matrix(n, |k, j| {
        let l = 0.5 * a[k * n + j].re;
        let (r, s) = if k == j {
            (curve.d_nodes()[k] / curve.speed()[k], w[k] / (4.0 * PI))
        } else {
            let r = y[k] - y[j];
            (r, w[j] / (4.0 * PI * r.norm_sqr()))
        };
        [[l + s * r.re * r.re, s * r.re * r.im], [s * r.im * r.re, l + s * r.im * r.im]]
    })
}

/// `𝒟`, `𝒟^T` and `𝒮` on one curve.
#[derive(Debug, Clone)]
pub struct StokesMatrices {
    pub dlp: DMatrix<f64>,
    pub dlpt: DMatrix<f64>,
    pub slp: DMatrix<f64>,
}

pub fn stokes_boundary_matrices(curve: &Curve) -> StokesMatrices {
    StokesMatrices { dlp: stokes_dlp_matrix(curve), dlpt: stokes_dlpt_matrix(curve), slp: stokes_slp_matrix(curve) }
}

fn shift(mut m: DMatrix<f64>, s: f64) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        m[(i, i)] += s;
    }
    m
}

/// Stacks a vector density as interleaved components.
pub fn interleave(v: &[[f64; 2]]) -> Vec<f64> {
    v.iter().flat_map(|s| [s[0], s[1]]).collect()
}

pub fn deinterleave(v: &[f64]) -> Vec<[f64; 2]> {
    v.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// Boundary operator of a single-curve problem.
pub fn boundary_operator(equation: Equation, condition: Condition, side: Side, curve: &Curve) -> DMatrix<f64> {
    let sgn = if side == Side::Exterior { 1.0 } else { -1.0 };
    match (equation, condition) {
        (Equation::Laplace, Condition::Dirichlet) => shift(laplace_dlp_matrix(curve), 0.5 * sgn),
        (Equation::Laplace, Condition::Neumann) => shift(laplace_dlpt_matrix(curve), -0.5 * sgn),
        (Equation::Stokes, Condition::Neumann) => shift(stokes_dlpt_matrix(curve), -0.5 * sgn),
        (Equation::Stokes, Condition::Dirichlet) => match side {
            Side::Interior => shift(stokes_dlp_matrix(curve), -0.5),
            Side::Exterior => shift(stokes_dlp_matrix(curve) + stokes_slp_matrix(curve), 0.5),
        },
    }
}

pub fn assemble(spec: &BvpSpec) -> Result<NystromSystem> {
    spec.validate()?;
    if spec.curves.len() != 1 {
        return Err(Error::Unsupported("dense assembly takes a single curve; use the multibody solver".into()));
    }
    let rhs = match &spec.data[0] {
        Density::Real(v) => DVector::from_column_slice(v),
        Density::Vector(v) => DVector::from_vec(interleave(v)),
        Density::Complex(_) => return Err(Error::Unsupported("complex boundary data".into())),
    };
    let matrix = boundary_operator(spec.equation, spec.condition, spec.side, &spec.curves[0]);
    Ok(NystromSystem { matrix, rhs, representation: spec.representation() })
}

/// Minimum-norm least-squares solution via SVD with singular values below
/// `RANK_TOL·σ_max` discarded. Returns the solution and the relative
/// residual `‖Ax − b‖∞/‖b‖∞`.
pub fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = RANK_TOL * smax;
    let mut x = svd.solve(b, eps).expect("U and V were computed");
    let mut r = b - a * &x;
    // nalgebra's SVD leaves ~1e-11 backward error; refine with the same factors
    for _ in 0..3 {
        let y = &x + svd.solve(&r, eps).expect("U and V were computed");
        let ry = b - a * &y;
        if ry.amax() >= r.amax() {
            break;
        }
        (x, r) = (y, ry);
    }
    let bn = b.amax();
    (x, if bn > 0.0 { r.amax() / bn } else { r.amax() })
}

/// Solved density with its residual certificate.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub density: Density,
    pub residual: f64,
    pub representation: Representation,
}

pub fn solve_bvp(spec: &BvpSpec) -> Result<BvpSolution> {
    let sys = assemble(spec)?;
    let (x, residual) = solve_least_squares(&sys.matrix, &sys.rhs);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Residual { residual, tolerance: RESIDUAL_TOL });
    }
    let density = match spec.equation {
        Equation::Laplace => Density::Real(x.as_slice().to_vec()),
        Equation::Stokes => Density::Vector(deinterleave(x.as_slice())),
    };
    Ok(BvpSolution { density, residual, representation: sys.representation })
}

/// Laplace representation evaluated at targets.
pub fn eval_laplace(ev: &LaplaceEvaluator, rep: Representation, tau: &[f64], targets: &TargetBatch) -> Result<PotentialResult> {
    match rep {
        Representation::D => ev.dlp(tau, targets),
        Representation::S => ev.slp(tau, targets),
        Representation::DPlusS => {
            let (d, s) = (ev.dlp(tau, targets)?, ev.slp(tau, targets)?);
            Ok(PotentialResult {
                u: d.u.iter().zip(&s.u).map(|(a, b)| a + b).collect(),
                grad: d.grad.iter().zip(&s.grad).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect(),
            })
        }
    }
}

/// Stokes representation evaluated at targets.
pub fn eval_stokes(ev: &StokesEvaluator, rep: Representation, sigma: &[[f64; 2]], targets: &TargetBatch) -> Result<StokesVelocity> {
    match rep {
        Representation::D => ev.dlp(sigma, targets),
        Representation::S => ev.slp(sigma, targets),
        Representation::DPlusS => ev.combined(sigma, targets),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::native;
    use layerpot_oracle::{periodic_with_singularity, Tolerance};

    fn star(n: usize) -> Curve {
        CurveSpec::star(0.3, 5, n).build().unwrap()
    }

    #[test]
    fn circle_dlp_matrix() {
        let c = CurveSpec::ellipse(1.0, 1.0, 32).build().unwrap();
        let d = laplace_dlp_matrix(&c);
        for v in d.iter() {
            assert!((v + 1.0 / 64.0).abs() < 1e-15);
        }
        let dt = laplace_dlpt_matrix(&c);
        assert!((dt - d.transpose()).amax() < 1e-15);
    }

    #[test]
    fn dlp_row_sums() {
        let d = laplace_dlp_matrix(&star(256));
        for r in d.row_iter() {
            assert!((r.sum() + 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_diagonal_limits() {
        let spec = CurveSpec::star(0.3, 5, 64);
        let c = spec.build().unwrap();
        let k = 9;
        let (x, xp, _) = spec.eval(c.params()[k]);
        let nx = -C64::i() * xp / xp.norm();
        let t = xp / xp.norm();
        let kappa = c.curvature()[k];
        // kernels at y(s ± h), averaged so the O(h) term cancels
        let kernels = |h: f64| {
            let (y, yp, _) = spec.eval(c.params()[k] + h);
            let ny = -C64::i() * yp / yp.norm();
            let r = x - y;
            let rho2 = r.norm_sqr();
            let rr = [[r.re * r.re, r.re * r.im], [r.im * r.re, r.im * r.im]];
            let lap = -dot(r, nx) / rho2 / (2.0 * PI);
            let sd = rr.map(|row| row.map(|v| dot(r, ny) / (PI * rho2 * rho2) * v));
            let st = rr.map(|row| row.map(|v| -dot(r, nx) / (PI * rho2 * rho2) * v));
            (lap, sd, st)
        };
        let h = 1e-4;
        let (p, m) = (kernels(h), kernels(-h));
        assert!((0.5 * (p.0 + m.0) + kappa / (4.0 * PI)).abs() <= 1e-6);
        let tt = [[t.re * t.re, t.re * t.im], [t.im * t.re, t.im * t.im]];
        for a in 0..2 {
            for b in 0..2 {
                let want = -kappa / (2.0 * PI) * tt[a][b];
                assert!((0.5 * (p.1[a][b] + m.1[a][b]) - want).abs() <= 1e-6);
                assert!((0.5 * (p.2[a][b] + m.2[a][b]) - want).abs() <= 1e-6);
            }
        }
        // the assembled diagonal on the unit circle
        let circ = CurveSpec::ellipse(1.0, 1.0, 16).build().unwrap();
        let m = stokes_dlp_matrix(&circ);
        let t = circ.d_nodes()[3];
        let w = 2.0 * PI / 16.0;
        assert!((m[(6, 6)] + t.re * t.re * w / (2.0 * PI)).abs() < 1e-15);
        assert!((m[(6, 7)] + t.re * t.im * w / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn weighted_adjoint() {
        let c = star(96);
        let (d, dt) = (laplace_dlp_matrix(&c), laplace_dlpt_matrix(&c));
        let tau = DVector::from_fn(96, |j, _| (j as f64 * 0.37).sin());
        let phi = DVector::from_fn(96, |j, _| (j as f64 * 0.11).cos() + 0.2);
        let w = DVector::from_column_slice(c.weights());
        let lhs = (&d * &tau).component_mul(&w).dot(&phi);
        let rhs = (&dt * &phi).component_mul(&w).dot(&tau);
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn stokes_dlp_constant_density() {
        let c = star(200);
        let d = stokes_dlp_matrix(&c);
        let sigma = DVector::from_vec(interleave(&vec![[0.4, -0.9]; 200]));
        let u = d * sigma;
        for k in 0..200 {
            assert!((u[2 * k] + 0.2).abs() <= 1e-10 && (u[2 * k + 1] - 0.45).abs() <= 1e-10);
        }
    }

    #[test]
    fn stokes_slp_rows_match_quadrature() {
        // 256 nodes leave 2e-11 on this star; the product weights converge
        // like the trigonometric interpolant of the density
        let n = 320;
        let spec = CurveSpec::star(0.3, 5, n);
        let c = spec.build().unwrap();
        let sig = |s: f64| [(2.0 * s).cos() + 0.5, (s).sin() - 0.3 * (3.0 * s).cos()];
        let sigma: Vec<[f64; 2]> = c.params().iter().map(|&s| sig(s)).collect();
        let u = stokes_slp_matrix(&c) * DVector::from_vec(interleave(&sigma));
        for k in [0, 31, 100, 200].map(|k| k * n / 256) {
            let (x, _, _) = spec.eval(c.params()[k]);
            for m in 0..2 {
                let f = |s: f64| {
                    let (y, yp, _) = spec.eval(s);
                    let r = x - y;
                    let rho2 = r.norm_sqr();
                    let sv = sig(s);
                    let sv = C64::new(sv[0], sv[1]);
                    let v = -0.5 * rho2.ln() * sv + dot(r, sv) * r / rho2;
                    let v = v * yp.norm() / (4.0 * PI);
                    if m == 0 {
                        v.re
                    } else {
                        v.im
                    }
                };
                let o = periodic_with_singularity(f, c.params()[k], Tolerance::default()).value;
                assert!((u[2 * k + m] - o).abs() <= 1e-12, "k={k} m={m}: {:e}", (u[2 * k + m] - o).abs());
            }
        }
    }

    #[test]
    fn laplace_interior_dirichlet_round_trip() {
        let c = star(200);
        let uref = |x: C64| (C64::i() * (1.0 + x)).exp().re;
        let f: Vec<f64> = c.nodes().iter().map(|&y| uref(y)).collect();
        let spec = BvpSpec::single(Equation::Laplace, Condition::Dirichlet, Side::Interior, c.clone(), Density::Real(f));
        let sol = solve_bvp(&spec).unwrap();
        assert!(sol.residual < 1e-12);
        let x = C64::new(0.2, -0.3);
        let (u, _) = native::laplace_dlp(&c, sol.density.as_real().unwrap(), x);
        assert!((u - uref(x)).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_data() {
        let c = star(32);
        let spec = BvpSpec::single(Equation::Stokes, Condition::Dirichlet, Side::Interior, c.clone(), Density::Real(vec![0.0; 32]));
        assert!(solve_bvp(&spec).is_err());
        let spec = BvpSpec::single(Equation::Laplace, Condition::Dirichlet, Side::Interior, c, Density::Real(vec![0.0; 30]));
        assert!(matches!(solve_bvp(&spec), Err(Error::LengthMismatch { .. })));
    }
}
