//! Exterior Stokes Dirichlet problem around several bodies.
//!
//! With `u = Σ_i (𝐃 + 𝐒)σ_i`, the diagonal blocks of the system are the
//! dense `𝒟 + 𝒮 + ½` of each body and the off-diagonal blocks are close
//! evaluations of one body's potential at the other bodies' nodes. The
//! system is solved matrix-free by GMRES.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bie::{boundary_operator, deinterleave, interleave, BvpSpec, Condition, Equation};
use crate::cauchy::{Side, TargetBatch};
use crate::curve::{Curve, CurveSpec, Density, Location};
use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresConfig, GmresResult};
use crate::laplace::CloseOptions;
use crate::stokes::{StokesEvaluator, StokesVelocity, DEFAULT_BETA};

/// Block operator of the multibody system.
#[derive(Debug)]
pub struct MultibodyOperator {
    evaluators: Vec<StokesEvaluator>,
    blocks: Vec<DMatrix<f64>>,
    /// Offsets of each body's unknowns in the global vector.
    offsets: Vec<usize>,
    /// For source body `j`: the nodes of every other body, as exterior targets.
    targets: Vec<TargetBatch>,
}

impl MultibodyOperator {
    pub fn new(curves: Vec<Curve>, opts: CloseOptions, beta: f64) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Unsupported("no bodies".into()));
        }
        check_disjoint(&curves)?;
        let blocks = curves
            .par_iter()
            .map(|c| boundary_operator(Equation::Stokes, Condition::Dirichlet, Side::Exterior, c))
            .collect();
        let mut offsets = vec![0];
        for c in &curves {
            offsets.push(offsets.last().unwrap() + 2 * c.n());
        }
        let targets = (0..curves.len())
            .map(|j| {
                let pts = curves.iter().enumerate().filter(|&(i, _)| i != j).flat_map(|(_, c)| c.nodes().iter().copied()).collect();
                TargetBatch::exterior(pts)
            })
            .collect();
        let evaluators = curves
            .into_iter()
            .map(|c| {
                // each body gets its own anchor at its centroid
                let o = CloseOptions { anchor: None, ..opts };
                StokesEvaluator::new(c, o, beta)
            })
            .collect::<Result<_>>()?;
        Ok(MultibodyOperator { evaluators, blocks, offsets, targets })
    }

    pub fn bodies(&self) -> usize {
        self.evaluators.len()
    }

    /// Total number of unknowns.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn curve(&self, i: usize) -> &Curve {
        self.evaluators[i].curve()
    }

    pub fn evaluator(&self, i: usize) -> &StokesEvaluator {
        &self.evaluators[i]
    }

    /// Dense diagonal block `𝒟 + 𝒮 + ½` of body `i`.
    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    /// Splits a global vector into per-body vector densities.
    pub fn split(&self, x: &[f64]) -> Vec<Vec<[f64; 2]>> {
        self.offsets.windows(2).map(|w| deinterleave(&x[w[0]..w[1]])).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: x.len() });
        }
        let k = self.bodies();
        let sigmas = self.split(x);
        let mut y: Vec<f64> = (0..k)
            .into_par_iter()
            .flat_map_iter(|i| {
                let xi = DVector::from_column_slice(&x[self.offsets[i]..self.offsets[i + 1]]);
                (&self.blocks[i] * xi).as_slice().to_vec()
            })
            .collect();
        if k == 1 {
            return Ok(y);
        }
        let far: Vec<StokesVelocity> = (0..k)
            .into_par_iter()
            .map(|j| self.evaluators[j].combined(&sigmas[j], &self.targets[j]))
            .collect::<Result<_>>()?;
        // scatter in a fixed order so the sum does not depend on scheduling
        for (j, u) in far.iter().enumerate() {
            let mut t = 0;
            for i in (0..k).filter(|&i| i != j) {
                for node in 0..self.curve(i).n() {
                    let at = self.offsets[i] + 2 * node;
                    y[at] += u[t][0];
                    y[at + 1] += u[t][1];
                    t += 1;
                }
            }
        }
        Ok(y)
    }

    /// Velocity `Σ_i (𝐃 + 𝐒)σ_i` at points outside every body.
    pub fn velocity(&self, sigmas: &[Vec<[f64; 2]>], points: &[C64]) -> Result<StokesVelocity> {
        if sigmas.len() != self.bodies() {
            return Err(Error::LengthMismatch { expected: self.bodies(), got: sigmas.len() });
        }
        let batch = TargetBatch::exterior(points.to_vec());
        let parts: Vec<StokesVelocity> =
            self.evaluators.iter().zip(sigmas).map(|(ev, s)| ev.combined(s, &batch)).collect::<Result<_>>()?;
        let mut u = vec![[0.0; 2]; points.len()];
        for p in &parts {
            for (a, b) in u.iter_mut().zip(p) {
                a[0] += b[0];
                a[1] += b[1];
            }
        }
        Ok(u)
    }
}

fn check_disjoint(curves: &[Curve]) -> Result<()> {
    for (i, a) in curves.iter().enumerate() {
        for (j, b) in curves.iter().enumerate() {
            if i != j && a.nodes().iter().any(|&y| b.locate(y) != Location::Exterior) {
                return Err(Error::InvalidCurve(format!("bodies {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

/// Per-body densities and the GMRES record.
#[derive(Debug, Clone)]
pub struct MultibodySolution {
    pub densities: Vec<Density>,
    pub gmres: GmresResult,
}

impl MultibodySolution {
    pub fn sigmas(&self) -> Vec<Vec<[f64; 2]>> {
        self.densities.iter().map(|d| d.as_vector().expect("vector density").to_vec()).collect()
    }
}

/// Solves on a prepared operator with interleaved per-body data.
pub fn solve_with_operator(op: &MultibodyOperator, data: &[Vec<[f64; 2]>], cfg: &GmresConfig) -> Result<MultibodySolution> {
    if data.len() != op.bodies() {
        return Err(Error::LengthMismatch { expected: op.bodies(), got: data.len() });
    }
    let mut rhs = Vec::with_capacity(op.len());
    for (i, g) in data.iter().enumerate() {
        op.curve(i).check_len(g.len())?;
        rhs.extend(interleave(g));
    }
    let r = gmres(|v| op.apply(v), &rhs, cfg)?;
    if !r.converged {
        return Err(Error::Gmres { iterations: r.iterations, residual: r.residual });
    }
    let densities = op.split(&r.x).into_iter().map(Density::Vector).collect();
    Ok(MultibodySolution { densities, gmres: r })
}

pub fn solve_multibody(spec: &BvpSpec, cfg: &GmresConfig) -> Result<MultibodySolution> {
    if (spec.equation, spec.condition, spec.side) != (Equation::Stokes, Condition::Dirichlet, Side::Exterior) {
        return Err(Error::Unsupported("multibody solver handles the exterior Stokes Dirichlet problem".into()));
    }
    if spec.curves.len() != spec.data.len() {
        return Err(Error::LengthMismatch { expected: spec.curves.len(), got: spec.data.len() });
    }
    let data = spec
        .data
        .iter()
        .map(|d| d.as_vector().map(<[_]>::to_vec).ok_or_else(|| Error::Unsupported("Stokes data must be vector valued".into())))
        .collect::<Result<Vec<_>>>()?;
    let op = MultibodyOperator::new(spec.curves.clone(), CloseOptions::default(), DEFAULT_BETA)?;
    solve_with_operator(&op, &data, cfg)
}

/// Deterministic arrangement of `bodies` ellipses in staggered rows with
/// minimum boundary separation `gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub bodies: usize,
    pub gap: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Bodies per row; `ceil(sqrt(bodies))` when absent.
    pub per_row: Option<usize>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig { bodies: 6, gap: 1e-3, n: 150, per_row: None }
    }
}

/// Placed ellipses with the attained minimum separation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub specs: Vec<CurveSpec>,
    pub min_gap: f64,
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    a: f64,
    b: f64,
    center: C64,
    angle: f64,
}

impl Ellipse {
    fn eval(&self, s: f64) -> (C64, C64, C64) {
        let rot = C64::from_polar(1.0, self.angle);
        let (sn, cs) = s.sin_cos();
        let (a, b) = (self.a, self.b);
        (self.center + rot * C64::new(a * cs, b * sn), rot * C64::new(-a * sn, b * cs), rot * C64::new(-a * cs, -b * sn))
    }

    /// `(l₁/a)² + (l₂/b)² − 1` in body coordinates; negative inside.
    fn level(&self, x: C64) -> f64 {
        let l = (x - self.center) * C64::from_polar(1.0, -self.angle);
        (l.re / self.a).powi(2) + (l.im / self.b).powi(2) - 1.0
    }

    fn contains(&self, x: C64) -> bool {
        self.level(x) < 0.0
    }

    fn radius(&self) -> f64 {
        self.a.max(self.b)
    }

    fn spec(&self, n: usize) -> CurveSpec {
        CurveSpec::Ellipse { a: self.a, b: self.b, n, center: [self.center.re, self.center.im], angle: self.angle }
    }
}

/// Distance between two ellipse boundaries: a coarse sampled search
/// refined by Newton's method on the squared distance.
fn boundary_distance(p: &Ellipse, q: &Ellipse) -> f64 {
    const M: usize = 128;
    let h = 2.0 * PI / M as f64;
    let qs: Vec<C64> = (0..M).map(|j| q.eval(j as f64 * h).0).collect();
    let (mut s, mut t, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..M {
        let z = p.eval(i as f64 * h).0;
        for (j, w) in qs.iter().enumerate() {
            let d = (z - w).norm_sqr();
            if d < best {
                (s, t, best) = (i as f64 * h, j as f64 * h, d);
            }
        }
    }
    for _ in 0..30 {
        let (z1, d1, dd1) = p.eval(s);
        let (z2, d2, dd2) = q.eval(t);
        let d = z1 - z2;
        let gs = (d.conj() * d1).re;
        let gt = -(d.conj() * d2).re;
        let hss = d1.norm_sqr() + (d.conj() * dd1).re;
        let htt = d2.norm_sqr() - (d.conj() * dd2).re;
        let hst = -(d1.conj() * d2).re;
        let det = hss * htt - hst * hst;
        if det <= 0.0 {
            break;
        }
        let ds = (htt * gs - hst * gt) / det;
        let dt = (hss * gt - hst * gs) / det;
        let cand = (p.eval(s - ds).0 - q.eval(t - dt).0).norm_sqr();
        if !(cand <= best) {
            break;
        }
        (s, t, best) = (s - ds, t - dt, cand);
        if ds.abs() + dt.abs() < 1e-15 {
            break;
        }
    }
    best.sqrt()
}

/// Whether the boundary of `p` enters `q`. Along `p` the level function of
/// `q` is a trigonometric polynomial of degree 2, so a sampled minimum
/// refined by Newton's method finds its global minimum.
fn enters(p: &Ellipse, q: &Ellipse) -> bool {
    const M: usize = 64;
    let g = |s: f64| q.level(p.eval(s).0);
    let h = 2.0 * PI / M as f64;
    let mut s = (0..M).map(|i| i as f64 * h).min_by(|&x, &y| g(x).total_cmp(&g(y))).unwrap();
    for _ in 0..30 {
        let e = 1e-4;
        let (gm, g0, gp) = (g(s - e), g(s), g(s + e));
        let (d1, d2) = ((gp - gm) / (2.0 * e), (gp - 2.0 * g0 + gm) / (e * e));
        if !(d2 > 0.0) {
            break;
        }
        let next = s - d1 / d2;
        if !(g(next) < g0) {
            break;
        }
        s = next;
    }
    g(s) < 0.0
}

fn overlap(p: &Ellipse, q: &Ellipse) -> bool {
    p.contains(q.center) || q.contains(p.center) || enters(p, q) || enters(q, p)
}

fn too_close(p: &Ellipse, q: &Ellipse, gap: f64) -> bool {
    if (p.center - q.center).norm() > p.radius() + q.radius() + 2.0 * gap {
        return false;
    }
    overlap(p, q) || boundary_distance(p, q) < gap
}

/// Smallest `x ∈ [lo, hi]` (to roundoff) for which `close(x)` is false,
/// given `close(lo)` and `!close(hi)`.
fn bisect(mut lo: f64, mut hi: f64, close: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if close(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Shape of body `i`: semi-axes and tilt from low-discrepancy sequences.
fn shape(i: usize) -> (f64, f64, f64) {
    let k = (i + 1) as f64;
    let a = 0.35 + 0.15 * frac(0.618_033_988_749_895 * k);
    let b = a * (0.45 + 0.35 * frac(0.414_213_562_373_095 * k));
    (a, b, PI * frac(0.754_877_666_246_693 * k))
}

pub fn ellipse_layout(cfg: &LayoutConfig) -> Result<Layout> {
    if cfg.bodies == 0 || !(cfg.gap > 0.0) {
        return Err(Error::Unsupported("layout needs at least one body and a positive gap".into()));
    }
    let per_row = cfg.per_row.unwrap_or_else(|| (cfg.bodies as f64).sqrt().ceil() as usize).max(1);
    let mut placed: Vec<Ellipse> = Vec::new();
    let mut y0 = 0.0;
    for row_start in (0..cfg.bodies).step_by(per_row) {
        // chain the row left to right at height 0
        let mut row: Vec<Ellipse> = Vec::new();
        for i in row_start..(row_start + per_row).min(cfg.bodies) {
            let (a, b, angle) = shape(i);
            let mut e = Ellipse { a, b, center: C64::new(0.0, 0.0), angle };
            if let Some(prev) = row.last().copied() {
                let lo = prev.center.re;
                let hi = lo + prev.radius() + e.radius() + 2.0 * cfg.gap + 1.0;
                let x = bisect(lo, hi, |x| too_close(&prev, &Ellipse { center: C64::new(x, 0.0), ..e }, cfg.gap));
                e.center = C64::new(x, 0.0);
            }
            row.push(e);
        }
        if !placed.is_empty() {
            // stagger odd rows, then lower the row onto the ones above
            let stagger = if (row_start / per_row) % 2 == 1 { 0.5 * row[0].radius() } else { 0.0 };
            let shifted = |dy: f64| -> Vec<Ellipse> {
                row.iter().map(|e| Ellipse { center: e.center + C64::new(stagger, y0 - dy), ..*e }).collect()
            };
            let clash = |dy: f64| shifted(dy).iter().any(|e| placed.iter().any(|p| too_close(p, e, cfg.gap)));
            let reach: f64 = placed.iter().chain(&row).map(|e| e.radius()).fold(0.0, f64::max);
            let dy = bisect(0.0, 2.0 * reach + 2.0 * cfg.gap + 1.0, clash);
            row = shifted(dy);
            y0 -= dy;
        }
        placed.extend(row);
    }
    let mut min_gap = f64::INFINITY;
    for (i, p) in placed.iter().enumerate() {
        for q in &placed[i + 1..] {
            min_gap = min_gap.min(if overlap(p, q) { 0.0 } else { boundary_distance(p, q) });
        }
    }
    Ok(Layout { specs: placed.iter().map(|e| e.spec(cfg.n)).collect(), min_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bie::{solve_bvp, stokes_dlp_matrix, stokes_slp_matrix};
    use crate::native;

    fn stokeslet(x: C64, y: C64, f: [f64; 2]) -> [f64; 2] {
        let r = x - y;
        let rho2 = r.norm_sqr();
        let rf = r.re * f[0] + r.im * f[1];
        let l = -0.5 * rho2.ln();
        [(l * f[0] + rf * r.re / rho2) / (4.0 * PI), (l * f[1] + rf * r.im / rho2) / (4.0 * PI)]
    }

    #[test]
    fn distance_of_separated_circles() {
        let p = Ellipse { a: 1.0, b: 1.0, center: C64::new(0.0, 0.0), angle: 0.0 };
        let q = Ellipse { a: 0.5, b: 0.5, center: C64::new(2.0, 1.0), angle: 0.3 };
        let want = 5f64.sqrt() - 1.5;
        assert!((boundary_distance(&p, &q) - want).abs() < 1e-14);
    }

    #[test]
    fn layout_attains_gap() {
        let l = ellipse_layout(&LayoutConfig { bodies: 6, gap: 1e-3, n: 64, per_row: None }).unwrap();
        assert_eq!(l.specs.len(), 6);
        assert!((l.min_gap - 1e-3).abs() < 1e-9, "{}", l.min_gap);
        let again = ellipse_layout(&LayoutConfig { bodies: 6, gap: 1e-3, n: 64, per_row: None }).unwrap();
        assert_eq!(l, again);
        // brute force over densely sampled boundaries
        const M: usize = 2048;
        let pts: Vec<Vec<C64>> = l
            .specs
            .iter()
            .map(|s| (0..M).map(|i| s.eval(2.0 * PI * i as f64 / M as f64).0).collect())
            .collect();
        let curves: Vec<Curve> = l.specs.iter().map(|s| s.with_n(256).build().unwrap()).collect();
        let mut dmin = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    assert!(pts[i].iter().step_by(16).all(|&x| curves[j].locate(x) == Location::Exterior));
                    for x in &pts[i] {
                        dmin = pts[j].iter().map(|y| (x - y).norm()).fold(dmin, f64::min);
                    }
                }
            }
        }
        assert!((dmin - 1e-3).abs() < 1e-5, "{dmin}");
    }

    #[test]
    fn single_body_matches_dense_solve() {
        let c = CurveSpec::ellipse(0.6, 0.3, 64).build().unwrap();
        let op = MultibodyOperator::new(vec![c.clone()], CloseOptions::default(), DEFAULT_BETA).unwrap();
        let x: Vec<f64> = (0..128).map(|i| (0.3 * i as f64).sin()).collect();
        let dense = (stokes_dlp_matrix(&c) + stokes_slp_matrix(&c)) * DVector::from_column_slice(&x) + DVector::from_column_slice(&x) * 0.5;
        let y = op.apply(&x).unwrap();
        assert!(y.iter().zip(dense.iter()).all(|(a, b)| (a - b).abs() <= 1e-13));

        let g: Vec<[f64; 2]> = c.nodes().iter().map(|&y| stokeslet(y, C64::new(0.1, 0.05), [1.0, -0.5])).collect();
        let mb = solve_with_operator(&op, &[g.clone()], &GmresConfig::default()).unwrap();
        let spec = BvpSpec::single(Equation::Stokes, Condition::Dirichlet, Side::Exterior, c, Density::Vector(g));
        let direct = solve_bvp(&spec).unwrap();
        let d = direct.density.as_vector().unwrap();
        let m = mb.densities[0].as_vector().unwrap();
        assert!(d.iter().zip(m).all(|(a, b)| (a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10));
    }

    #[test]
    fn two_bodies_match_dense_monolithic_solve() {
        let n = 96;
        let c1 = CurveSpec::ellipse(1.0, 0.5, n).build().unwrap();
        let c2 = CurveSpec::ellipse(0.7, 0.4, n).placed([2.7, 0.2], 0.4).build().unwrap();
        let curves = [c1.clone(), c2.clone()];
        // monolithic matrix with plain trapezoid off-diagonal blocks
        let mut a = DMatrix::zeros(4 * n, 4 * n);
        for (i, ci) in curves.iter().enumerate() {
            let diag = boundary_operator(Equation::Stokes, Condition::Dirichlet, Side::Exterior, ci);
            a.view_mut((2 * n * i, 2 * n * i), (2 * n, 2 * n)).copy_from(&diag);
            let cj = &curves[1 - i];
            for col in 0..2 * n {
                let mut e = vec![[0.0; 2]; n];
                e[col / 2][col % 2] = 1.0;
                for (row, &x) in ci.nodes().iter().enumerate() {
                    let s = native::stokes_slp(cj, &e, x);
                    let d = native::stokes_dlp(cj, &e, x);
                    a[(2 * n * i + 2 * row, 2 * n * (1 - i) + col)] = s[0] + d[0];
                    a[(2 * n * i + 2 * row + 1, 2 * n * (1 - i) + col)] = s[1] + d[1];
                }
            }
        }
        let src = [(C64::new(0.1, 0.0), [1.0, 0.3]), (C64::new(2.6, 0.25), [-0.4, 0.8])];
        let data: Vec<Vec<[f64; 2]>> = curves
            .iter()
            .map(|c| {
                c.nodes()
                    .iter()
                    .map(|&y| {
                        let (u, v) = (stokeslet(y, src[0].0, src[0].1), stokeslet(y, src[1].0, src[1].1));
                        [u[0] + v[0], u[1] + v[1]]
                    })
                    .collect()
            })
            .collect();
        let rhs = DVector::from_vec(data.iter().flat_map(|g| interleave(g)).collect());
        let dense = a.lu().solve(&rhs).unwrap();
        let spec = BvpSpec {
            equation: Equation::Stokes,
            condition: Condition::Dirichlet,
            side: Side::Exterior,
            curves: curves.to_vec(),
            data: data.into_iter().map(Density::Vector).collect(),
        };
        let sol = solve_multibody(&spec, &GmresConfig::default()).unwrap();
        let x: Vec<f64> = sol.sigmas().iter().flat_map(|s| interleave(s)).collect();
        let err = x.iter().zip(dense.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-11, "{err:e}");
    }

    #[test]
    fn apply_is_linear() {
        let l = ellipse_layout(&LayoutConfig { bodies: 3, gap: 0.05, n: 48, per_row: None }).unwrap();
        let curves = l.specs.iter().map(|s| s.build().unwrap()).collect();
        let op = MultibodyOperator::new(curves, CloseOptions::default(), DEFAULT_BETA).unwrap();
        let x: Vec<f64> = (0..op.len()).map(|i| (0.17 * i as f64).cos()).collect();
        let alpha = -2.75;
        let y = op.apply(&x).unwrap();
        let ya = op.apply(&x.iter().map(|v| alpha * v).collect::<Vec<_>>()).unwrap();
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(y.iter().zip(&ya).all(|(a, b)| (alpha * a - b).abs() <= 1e-14 * scale * alpha.abs()));
    }

    #[test]
    fn rejects_overlap_and_wrong_problem() {
        let c1 = CurveSpec::ellipse(1.0, 0.5, 32).build().unwrap();
        let c2 = CurveSpec::ellipse(1.0, 0.5, 32).placed([0.5, 0.0], 0.0).build().unwrap();
        assert!(MultibodyOperator::new(vec![c1.clone(), c2], CloseOptions::default(), DEFAULT_BETA).is_err());
        let spec = BvpSpec::single(Equation::Laplace, Condition::Dirichlet, Side::Exterior, c1, Density::Real(vec![0.0; 32]));
        assert!(matches!(solve_multibody(&spec, &GmresConfig::default()), Err(Error::Unsupported(_))));
    }
}
