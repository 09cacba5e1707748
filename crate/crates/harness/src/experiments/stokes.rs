//! Stokes single layer near a second body (Example 1), near the tip of thin
//! ellipses (Example 2), and the four BVPs on a star (Example 3).

use std::f64::consts::PI;

use anyhow::Result;
use layerpot::bie::{eval_stokes, representation, BvpSpec, Condition, Equation, Representation};
use layerpot::curve::Density;
use layerpot::{native, CloseOptions, Curve, CurveSpec, Side, StokesEvaluator, TargetBatch, C64};
use layerpot_oracle::{periodic_with_singularity, Tolerance};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decays_after_knee, lookup, Check, ConvergenceRow};
use crate::grid::{ErrorGrid, GridSpec, PointClass};
use crate::reference::{example3_stokeslets, ReferenceField};

/// `(1/4π)∫ (log(1/ρ) f + (r·f) r/ρ²) ds` for the analytic ellipse
/// `a cos s + i b sin s` and density `f = κ n`, by adaptive quadrature split
/// at the parameter `t` nearest the target.
pub fn ellipse_slp_oracle(a: f64, b: f64, x: C64, t: f64) -> [f64; 2] {
    let tol = Tolerance { abs: 1e-16, rel: 1e-15, max_intervals: 40000 };
    let comp = |m: usize| {
        let f = move |s: f64| {
            let (sn, cs) = s.sin_cos();
            let y = C64::new(a * cs, b * sn);
            let zp = C64::new(-a * sn, b * cs);
            let speed = zp.norm();
            let kappa = a * b / speed.powi(3);
            let n = -C64::i() * zp / speed;
            let (fx, fy) = (kappa * n.re, kappa * n.im);
            let r = x - y;
            let rho2 = r.norm_sqr();
            let rf = r.re * fx + r.im * fy;
            let l = -0.5 * rho2.ln();
            let v = if m == 0 { l * fx + rf * r.re / rho2 } else { l * fy + rf * r.im / rho2 };
            v * speed / (4.0 * PI)
        };
        periodic_with_singularity(f, t, tol).value
    };
    [comp(0), comp(1)]
}

/// Parameter of the point of `a cos s + i b sin s` closest to `x`.
fn ellipse_nearest(a: f64, b: f64, x: C64) -> f64 {
    let mut best = (0.0, f64::INFINITY);
    for k in 0..2048 {
        let s = 2.0 * PI * k as f64 / 2048.0;
        let d = (C64::new(a * s.cos(), b * s.sin()) - x).norm();
        if d < best.1 {
            best = (s, d);
        }
    }
    let mut s = best.0;
    for _ in 0..50 {
        let (sn, cs) = s.sin_cos();
        let d = C64::new(a * cs, b * sn) - x;
        let (p, pp) = (C64::new(-a * sn, b * cs), C64::new(-a * cs, -b * sn));
        let g = (d.conj() * p).re;
        let h = p.norm_sqr() + (d.conj() * pp).re;
        if h <= 0.0 {
            break;
        }
        s -= g / h;
    }
    s
}

/// Errors below this level are rounding noise and not required to decrease.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

fn sup_diff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1])).fold(0.0, f64::max)
}

fn curvature_force(curve: &Curve) -> Vec<[f64; 2]> {
    curve.curvature().iter().zip(curve.normals()).map(|(k, n)| [k * n.re, k * n.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example1Config {
    /// Semi-axes of both ellipses.
    pub a: f64,
    pub b: f64,
    pub deltas: Vec<f64>,
    pub ns: Vec<usize>,
}

impl Default for Example1Config {
    fn default() -> Self {
        Example1Config { a: 1.0, b: 2.0, deltas: vec![0.1, 0.01, 0.001], ns: vec![16, 24, 32, 48, 64, 96, 128, 192, 256] }
    }
}

/// Interaction force of one ellipse on the nodes of its translated copy at
/// gap δ, close and native, as sup errors against the quadrature oracle.
pub fn run_example1(cfg: &Example1Config) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &delta in &cfg.deltas {
        let shift = C64::new(2.0 * cfg.a + delta, 0.0);
        for &n in &cfg.ns {
            let src = CurveSpec::ellipse(cfg.a, cfg.b, n).build()?;
            let targets: Vec<C64> = src.nodes().iter().map(|y| y + shift).collect();
            let force = curvature_force(&src);
            let oracle: Vec<[f64; 2]> =
                targets.par_iter().map(|&x| ellipse_slp_oracle(cfg.a, cfg.b, x, ellipse_nearest(cfg.a, cfg.b, x))).collect();
            let ev = StokesEvaluator::with_defaults(src.clone())?;
            let close = ev.slp(&force, &TargetBatch::exterior(targets.clone()))?;
            let plain: Vec<[f64; 2]> = targets.par_iter().map(|&x| native::stokes_slp(&src, &force, x)).collect();
            let case = format!("delta={delta}");
            rows.push(ConvergenceRow::new(n, case.clone(), "close", sup_diff(&close, &oracle)));
            rows.push(ConvergenceRow::new(n, case, "native", sup_diff(&plain, &oracle)));
        }
    }
    Ok(rows)
}

pub fn check_example1(rows: &[ConvergenceRow], cfg: &Example1Config) -> Vec<Check> {
    let mut out: Vec<Check> = cfg
        .deltas
        .iter()
        .map(|d| match lookup(rows, 64, &format!("delta={d}"), "close") {
            Some(e) => Check::at_most(format!("close, delta={d}, N=64"), e, 1e-11),
            None => Check::new(format!("close, delta={d}, N=64"), false, "missing"),
        })
        .collect();
    out.push(match lookup(rows, 256, "delta=0.001", "native") {
        Some(e) => Check::at_least("native, delta=0.001, N=256", e, 1e-4),
        None => Check::new("native, delta=0.001, N=256", false, "missing"),
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example2Config {
    pub aspects: Vec<f64>,
    pub delta: f64,
    pub ns: Vec<usize>,
    /// Anchor distance ratio; thin ellipses cannot keep the default.
    pub anchor_ratio: f64,
}

impl Default for Example2Config {
    fn default() -> Self {
        Example2Config {
            aspects: vec![2.0, 4.0, 8.0],
            delta: 1e-3,
            ns: vec![32, 48, 64, 96, 128, 160, 192, 256, 320, 384, 448, 512],
            anchor_ratio: 0.05,
        }
    }
}

/// Single layer of `κn` on `cos s + i A sin s` at distance δ beyond the tip.
pub fn run_example2(cfg: &Example2Config) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &aspect in &cfg.aspects {
        let x = C64::new(0.0, aspect + cfg.delta);
        let oracle = ellipse_slp_oracle(1.0, aspect, x, PI / 2.0);
        for &n in &cfg.ns {
            let curve = CurveSpec::ellipse(1.0, aspect, n).build()?;
            let force = curvature_force(&curve);
            let opts = CloseOptions { anchor_ratio: cfg.anchor_ratio, ..CloseOptions::default() };
            let ev = StokesEvaluator::new(curve.clone(), opts, layerpot::stokes::DEFAULT_BETA)?;
            let close = ev.slp(&force, &TargetBatch::exterior(vec![x]))?;
            let plain = native::stokes_slp(&curve, &force, x);
            let case = format!("aspect={aspect}");
            rows.push(ConvergenceRow::new(n, case.clone(), "close", sup_diff(&close, &[oracle])));
            rows.push(ConvergenceRow::new(n, case, "native", sup_diff(&[plain], &[oracle])));
        }
    }
    Ok(rows)
}

pub fn check_example2(rows: &[ConvergenceRow], cfg: &Example2Config) -> Vec<Check> {
    let mut out = Vec::new();
    for &aspect in &cfg.aspects {
        let case = format!("aspect={aspect}");
        let errs: Vec<f64> = cfg.ns.iter().filter_map(|&n| lookup(rows, n, &case, "close")).collect();
        out.push(Check::new(format!("close error decays in N, {case}"), decays_after_knee(&errs, ROUNDOFF_FLOOR), super::fmt_errs(&errs)));
    }
    out.push(match lookup(rows, 128, "aspect=2", "close") {
        Some(e) => Check::at_most("close, aspect=2, N=128", e, 1e-11),
        None => Check::new("close, aspect=2, N=128", false, "missing"),
    });
    let native: Vec<f64> = cfg.aspects.iter().filter_map(|a| lookup(rows, 128, &format!("aspect={a}"), "native")).collect();
    let (lo, hi) = native.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
    out.push(Check::new(
        "native errors at N=128 within one order of magnitude",
        native.len() == cfg.aspects.len() && hi <= 10.0 * lo,
        super::fmt_errs(&native),
    ));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StokesCase {
    ExtDirichlet,
    IntDirichlet,
    ExtNeumann,
    IntNeumann,
}

impl StokesCase {
    pub const ALL: [StokesCase; 4] = [StokesCase::ExtDirichlet, StokesCase::IntDirichlet, StokesCase::ExtNeumann, StokesCase::IntNeumann];

    pub fn name(self) -> &'static str {
        match self {
            StokesCase::ExtDirichlet => "ext Dirichlet",
            StokesCase::IntDirichlet => "int Dirichlet",
            StokesCase::ExtNeumann => "ext Neumann",
            StokesCase::IntNeumann => "int Neumann",
        }
    }

    pub fn side(self) -> Side {
        match self {
            StokesCase::ExtDirichlet | StokesCase::ExtNeumann => Side::Exterior,
            _ => Side::Interior,
        }
    }

    pub fn condition(self) -> Condition {
        match self {
            StokesCase::ExtDirichlet | StokesCase::IntDirichlet => Condition::Dirichlet,
            _ => Condition::Neumann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example3Config {
    pub curve: CurveSpec,
    pub ns: Vec<usize>,
    pub grid: GridSpec,
    pub beta: f64,
    /// Sources for the exterior problems; interior ones use the same
    /// directions at radius 2.
    pub exterior_reference: ReferenceField,
    pub interior_reference: ReferenceField,
}

impl Default for Example3Config {
    fn default() -> Self {
        Example3Config {
            curve: CurveSpec::star(0.3, 5, 250),
            ns: vec![100, 150, 200, 250, 300, 350],
            grid: GridSpec::square(1.5, 0.02),
            beta: layerpot::stokes::DEFAULT_BETA,
            exterior_reference: ReferenceField::StokesletSum { stokeslets: example3_stokeslets(false) },
            interior_reference: ReferenceField::StokesletSum { stokeslets: example3_stokeslets(true) },
        }
    }
}

impl Example3Config {
    pub fn reference(&self, case: StokesCase) -> &ReferenceField {
        match case.side() {
            Side::Interior => &self.interior_reference,
            Side::Exterior => &self.exterior_reference,
        }
    }
}

/// Boundary data of a Stokes case: velocity or traction at the nodes.
pub fn stokes_data(case: StokesCase, curve: &Curve, reference: &ReferenceField) -> Result<Vec<[f64; 2]>> {
    curve
        .nodes()
        .iter()
        .zip(curve.normals())
        .map(|(&y, &n)| match case.condition() {
            Condition::Dirichlet => reference.velocity(y),
            Condition::Neumann => reference.traction(y, n),
        })
        .collect::<Option<_>>()
        .ok_or_else(|| anyhow::anyhow!("{reference:?} is not a Stokes field"))
}

#[derive(Debug)]
pub struct StokesSolution {
    pub case: StokesCase,
    pub evaluator: StokesEvaluator,
    pub sigma: Vec<[f64; 2]>,
    pub representation: Representation,
    pub residual: f64,
    /// Sup norm of the boundary data.
    pub data_norm: f64,
}

pub fn solve_stokes_case(case: StokesCase, curve: &Curve, reference: &ReferenceField, beta: f64) -> Result<StokesSolution> {
    reference.check_side(curve, case.side())?;
    let data = stokes_data(case, curve, reference)?;
    let data_norm = data.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
    if !(0.1..=1.0).contains(&data_norm) {
        log::warn!("{}: boundary data sup norm {data_norm:.3} outside [0.1, 1]", case.name());
    }
    let spec = BvpSpec::single(Equation::Stokes, case.condition(), case.side(), curve.clone(), Density::Vector(data));
    let (density, residual) = super::solve_sweep(&spec)?;
    let sigma = density.as_vector().expect("vector density").to_vec();
    let evaluator = StokesEvaluator::new(curve.clone(), CloseOptions::default(), beta)?;
    Ok(StokesSolution { case, evaluator, sigma, representation: representation(Equation::Stokes, case.condition(), case.side()), residual, data_norm })
}

/// Least-squares rigid motion `(c₁ − ωx₂, c₂ + ωx₁)` fitted to `err`.
pub fn fit_rigid_motion(points: &[C64], err: &[[f64; 2]]) -> [f64; 3] {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (x, e) in points.iter().zip(err) {
        let rows = [Vector3::new(1.0, 0.0, -x.im), Vector3::new(0.0, 1.0, x.re)];
        for (r, v) in rows.iter().zip(e) {
            m += r * r.transpose();
            rhs += r * *v;
        }
    }
    let c = m.lu().solve(&rhs).unwrap_or_else(Vector3::zeros);
    [c[0], c[1], c[2]]
}

impl StokesSolution {
    pub fn velocity(&self, points: &[C64]) -> Result<Vec<[f64; 2]>> {
        eval_stokes(&self.evaluator, self.representation, &self.sigma, &TargetBatch::new(points.to_vec(), self.case.side())).map_err(Into::into)
    }

    /// Velocity error field; the interior Neumann rigid motion is removed
    /// first.
    pub fn error_grid(&self, grid: GridSpec, reference: &ReferenceField) -> Result<ErrorGrid> {
        let curve = self.evaluator.curve();
        let side = self.case.side();
        ErrorGrid::build(
            grid,
            |x| PointClass::of(curve, x),
            |c| c.matches(side),
            |pts| {
                let u = self.velocity(pts)?;
                let mut d: Vec<[f64; 2]> = pts
                    .iter()
                    .zip(&u)
                    .map(|(&x, v)| {
                        let r = reference.velocity(x).expect("stokes field");
                        [v[0] - r[0], v[1] - r[1]]
                    })
                    .collect();
                if self.case == StokesCase::IntNeumann {
                    let [c1, c2, w] = fit_rigid_motion(pts, &d);
                    for (e, x) in d.iter_mut().zip(pts) {
                        e[0] -= c1 - w * x.im;
                        e[1] -= c2 + w * x.re;
                    }
                }
                Ok(d.iter().map(|e| e[0].hypot(e[1])).collect())
            },
        )
    }
}

pub fn run_example3(cfg: &Example3Config) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let curve = cfg.curve.with_n(n).build()?;
        for case in StokesCase::ALL {
            let reference = cfg.reference(case);
            let sol = solve_stokes_case(case, &curve, reference, cfg.beta)?;
            let g = sol.error_grid(cfg.grid, reference)?;
            log::info!("N={n} {}: {:.2e} (residual {:.1e}, data norm {:.3})", case.name(), g.max_error(), sol.residual, sol.data_norm);
            rows.push(ConvergenceRow::new(n, case.name(), "u", g.max_error()));
        }
    }
    Ok(rows)
}

pub fn check_example3(rows: &[ConvergenceRow], cfg: &Example3Config) -> Vec<Check> {
    let last = *cfg.ns.iter().max().unwrap_or(&0);
    let mut out = Vec::new();
    for case in StokesCase::ALL {
        let errs: Vec<f64> = cfg.ns.iter().filter_map(|&n| lookup(rows, n, case.name(), "u")).collect();
        out.push(Check::new(format!("{} decays in N", case.name()), decays_after_knee(&errs, ROUNDOFF_FLOOR), super::fmt_errs(&errs)));
        out.push(match lookup(rows, last, case.name(), "u") {
            Some(e) => Check::at_most(format!("{} at N={last}", case.name()), e, 1e-10),
            None => Check::new(format!("{} at N={last}", case.name()), false, "missing"),
        });
    }
    out
}
