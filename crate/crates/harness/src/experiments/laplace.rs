//! Laplace BVPs on a star: convergence table over a grid, and the
//! close-versus-native error field for the exterior single layer.

use anyhow::Result;
use layerpot::bie::{BvpSpec, Condition, Equation};
use layerpot::curve::Density;
use layerpot::laplace::PotentialResult;
use layerpot::{native, CloseOptions, Curve, CurveSpec, LaplaceEvaluator, Side, TargetBatch, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lookup, Check, ConvergenceRow};
use crate::grid::{ErrorGrid, GridSpec, PointClass};
use crate::reference::ReferenceField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplaceCase {
    /// Interior Dirichlet, double layer.
    DlpInt,
    /// Exterior Dirichlet, double layer.
    DlpExt,
    /// Interior Neumann, single layer.
    SlpInt,
    /// Exterior Neumann, single layer.
    SlpExt,
}

impl LaplaceCase {
    pub const ALL: [LaplaceCase; 4] = [LaplaceCase::DlpInt, LaplaceCase::DlpExt, LaplaceCase::SlpInt, LaplaceCase::SlpExt];

    pub fn name(self) -> &'static str {
        match self {
            LaplaceCase::DlpInt => "DLP int",
            LaplaceCase::DlpExt => "DLP ext",
            LaplaceCase::SlpInt => "SLP int",
            LaplaceCase::SlpExt => "SLP ext",
        }
    }

    pub fn side(self) -> Side {
        match self {
            LaplaceCase::DlpInt | LaplaceCase::SlpInt => Side::Interior,
            _ => Side::Exterior,
        }
    }

    pub fn condition(self) -> Condition {
        match self {
            LaplaceCase::DlpInt | LaplaceCase::DlpExt => Condition::Dirichlet,
            _ => Condition::Neumann,
        }
    }
}

/// Published maxima `[u, ∇u]` per case at N = 100, 150, 200, 250.
pub const PUBLISHED: [(usize, [[f64; 2]; 4]); 4] = [
    (100, [[2.9e-7, 9.6e-6], [8e-5, 2.6e-3], [7e-9, 2.7e-7], [1e-6, 3.9e-5]]),
    (150, [[7.8e-11, 3.8e-9], [6.7e-10, 6.8e-8], [1.4e-12, 8.7e-11], [7.9e-10, 7.5e-8]]),
    (200, [[2.1e-14, 2e-12], [2.6e-13, 3.4e-11], [9.8e-15, 7e-13], [2.7e-13, 3.6e-11]]),
    (250, [[2e-14, 1.7e-12], [4.7e-14, 4.6e-12], [5.9e-14, 4.5e-12], [4.9e-15, 6.3e-13]]),
];

pub fn published(n: usize, case: LaplaceCase, quantity: &str) -> Option<f64> {
    let col = LaplaceCase::ALL.iter().position(|&c| c == case)?;
    let q = if quantity == "u" { 0 } else { 1 };
    PUBLISHED.iter().find(|(m, _)| *m == n).map(|(_, row)| row[col][q])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaplaceConfig {
    pub curve: CurveSpec,
    pub ns: Vec<usize>,
    pub grid: GridSpec,
    pub interior_reference: ReferenceField,
    pub exterior_reference: ReferenceField,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        LaplaceConfig {
            curve: CurveSpec::star(0.3, 5, 250),
            ns: vec![100, 150, 200, 250],
            grid: GridSpec::square(1.5, 0.01),
            interior_reference: ReferenceField::Entire,
            exterior_reference: ReferenceField::pole(C64::new(0.1, 0.3)),
        }
    }
}

impl LaplaceConfig {
    pub fn reference(&self, case: LaplaceCase) -> &ReferenceField {
        match case.side() {
            Side::Interior => &self.interior_reference,
            Side::Exterior => &self.exterior_reference,
        }
    }
}

/// Solved density with everything needed to evaluate it.
#[derive(Debug)]
pub struct LaplaceSolution {
    pub case: LaplaceCase,
    pub evaluator: LaplaceEvaluator,
    pub tau: Vec<f64>,
    /// Constant added to `u` (interior Neumann only).
    pub offset: f64,
    pub residual: f64,
}

pub fn solve_case(case: LaplaceCase, curve: &Curve, reference: &ReferenceField) -> Result<LaplaceSolution> {
    reference.check_side(curve, case.side())?;
    let data: Vec<f64> = match case.condition() {
        Condition::Dirichlet => curve.nodes().iter().map(|&y| reference.laplace(y).map(|v| v.0)).collect::<Option<_>>(),
        Condition::Neumann => {
            curve.nodes().iter().zip(curve.normals()).map(|(&y, &n)| reference.normal_derivative(y, n)).collect::<Option<_>>()
        }
    }
    .ok_or_else(|| anyhow::anyhow!("{reference:?} is not a Laplace field"))?;
    let spec = BvpSpec::single(Equation::Laplace, case.condition(), case.side(), curve.clone(), Density::Real(data));
    let (density, residual) = super::solve_sweep(&spec)?;
    let tau = density.as_real().expect("real density").to_vec();
    let evaluator = LaplaceEvaluator::new(curve.clone(), CloseOptions::default());
    let mut out = LaplaceSolution { case, evaluator, tau, offset: 0.0, residual };
    if case == LaplaceCase::SlpInt {
        // the interior Neumann solution is fixed only up to a constant
        let origin = C64::new(0.0, 0.0);
        let u0 = out.evaluate(&[origin])?.u[0];
        out.offset = reference.laplace(origin).expect("laplace field").0 - u0;
    }
    Ok(out)
}

impl LaplaceSolution {
    pub fn evaluate(&self, points: &[C64]) -> Result<PotentialResult> {
        let batch = TargetBatch::new(points.to_vec(), self.case.side());
        let mut r = match self.case.condition() {
            Condition::Dirichlet => self.evaluator.dlp(&self.tau, &batch)?,
            Condition::Neumann => self.evaluator.slp(&self.tau, &batch)?,
        };
        r.u.iter_mut().for_each(|u| *u += self.offset);
        Ok(r)
    }

    /// Plain trapezoid rule at each point.
    pub fn native(&self, points: &[C64]) -> PotentialResult {
        let c = self.evaluator.curve();
        let (u, grad) = points
            .par_iter()
            .map(|&x| {
                let (u, g) = match self.case.condition() {
                    Condition::Dirichlet => native::laplace_dlp(c, &self.tau, x),
                    Condition::Neumann => native::laplace_slp(c, &self.tau, x),
                };
                (u + self.offset, g)
            })
            .unzip();
        PotentialResult { u, grad }
    }

    /// Error grids for `u` and `∇u` on the case's side.
    pub fn error_grids(&self, grid: GridSpec, reference: &ReferenceField, native: bool) -> Result<(ErrorGrid, ErrorGrid)> {
        let curve = self.evaluator.curve();
        let side = self.case.side();
        let mut grad_errs = Vec::new();
        let u_grid = ErrorGrid::build(
            grid,
            |x| PointClass::of(curve, x),
            |c| c.matches(side),
            |pts| {
                let r = if native { self.native(pts) } else { self.evaluate(pts)? };
                let mut ue = Vec::with_capacity(pts.len());
                for (i, &x) in pts.iter().enumerate() {
                    let (u, g) = reference.laplace(x).expect("laplace field");
                    ue.push((r.u[i] - u).abs());
                    grad_errs.push((r.grad[i][0] - g[0]).hypot(r.grad[i][1] - g[1]));
                }
                Ok(ue)
            },
        )?;
        let mut it = grad_errs.into_iter();
        let grad_grid = ErrorGrid { errors: u_grid.errors.iter().map(|e| e.and_then(|_| it.next())).collect(), ..u_grid.clone() };
        Ok((u_grid, grad_grid))
    }
}

/// Max grid errors in `u` and `∇u` for every case and N.
pub fn run_table(cfg: &LaplaceConfig) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let curve = cfg.curve.with_n(n).build()?;
        for case in LaplaceCase::ALL {
            let reference = cfg.reference(case);
            let sol = solve_case(case, &curve, reference)?;
            let (u, g) = sol.error_grids(cfg.grid, reference, false)?;
            log::info!("N={n} {}: u {:.2e}, grad {:.2e}, residual {:.1e}", case.name(), u.max_error(), g.max_error(), sol.residual);
            rows.push(ConvergenceRow::new(n, case.name(), "u", u.max_error()));
            rows.push(ConvergenceRow::new(n, case.name(), "grad_u", g.max_error()));
        }
    }
    Ok(rows)
}

/// Every entry at `n` within `factor` of the published value.
pub fn check_table(rows: &[ConvergenceRow], n: usize, factor: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for case in LaplaceCase::ALL {
        for q in ["u", "grad_u"] {
            let name = format!("N={n} {} {q}", case.name());
            match (lookup(rows, n, case.name(), q), published(n, case, q)) {
                (Some(e), Some(p)) => out.push(Check::at_most(name, e, factor * p)),
                _ => out.push(Check::new(name, false, "missing")),
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExteriorSlpConfig {
    pub curve: CurveSpec,
    pub grid: GridSpec,
    pub reference: ReferenceField,
}

impl Default for ExteriorSlpConfig {
    fn default() -> Self {
        ExteriorSlpConfig {
            curve: CurveSpec::star(0.3, 5, 240),
            grid: GridSpec::square(1.5, 0.01),
            reference: ReferenceField::pole(C64::new(0.1, 0.3)),
        }
    }
}

/// Close and native error fields for the exterior Neumann problem.
#[derive(Debug, Clone)]
pub struct ExteriorSlpResult {
    pub close_u: ErrorGrid,
    pub close_grad: ErrorGrid,
    pub native_u: ErrorGrid,
    pub native_grad: ErrorGrid,
    /// Largest native `u` error among points within `5/N` of the curve.
    pub native_near_max: f64,
    pub n: usize,
}

pub fn run_exterior_slp(cfg: &ExteriorSlpConfig) -> Result<ExteriorSlpResult> {
    let curve = cfg.curve.build()?;
    let sol = solve_case(LaplaceCase::SlpExt, &curve, &cfg.reference)?;
    let (close_u, close_grad) = sol.error_grids(cfg.grid, &cfg.reference, false)?;
    let (native_u, native_grad) = sol.error_grids(cfg.grid, &cfg.reference, true)?;
    let band = 5.0 / curve.n() as f64;
    let pts = cfg.grid.points();
    let native_near_max = pts
        .par_iter()
        .zip(&native_u.errors)
        .filter_map(|(&x, e)| {
            let e = (*e)?;
            let near = curve.nodes().iter().any(|y| (y - x).norm() <= band + 0.05) && distance_to_curve(&curve, x) <= band;
            near.then_some(e)
        })
        .reduce(|| 0.0, f64::max);
    Ok(ExteriorSlpResult { close_u, close_grad, native_u, native_grad, native_near_max, n: curve.n() })
}

/// Distance from `x` to the curve through the interpolant's closest point.
pub fn distance_to_curve(curve: &Curve, x: C64) -> f64 {
    let s = curve.nearest_param(x);
    (curve.interpolate(s).0 - x).norm()
}

pub fn check_exterior_slp(r: &ExteriorSlpResult) -> Vec<Check> {
    vec![
        Check::at_least("fraction of points with u error <= 1e-12", r.close_u.fraction_within(1e-12), 0.99),
        Check::at_least("fraction of points with grad error <= 1e-10", r.close_grad.fraction_within(1e-10), 0.99),
        Check::at_least("native u error within 5/N of the curve", r.native_near_max, 1e-2),
    ]
}
