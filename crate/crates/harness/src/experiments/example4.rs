//! Exterior Stokes Dirichlet problem around many nearly touching ellipses,
//! solved by GMRES with close evaluation for the body-body blocks.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::Result;
use layerpot::multibody::{ellipse_layout, solve_with_operator, LayoutConfig, MultibodyOperator};
use layerpot::stokes::DEFAULT_BETA;
use layerpot::{CloseOptions, Curve, GmresConfig, Location, C64};
use serde::{Deserialize, Serialize};

use super::{Check, ConvergenceRow};
use crate::grid::{ErrorGrid, GridSpec, PointClass};
use crate::reference::{ReferenceField, Stokeslet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example4Config {
    pub layout: LayoutConfig,
    /// Node counts per body for the convergence sweep; the last one also
    /// produces the error grid.
    pub ns: Vec<usize>,
    pub h: f64,
    /// Grid margin around the bodies' bounding box.
    pub margin: f64,
    pub gmres: GmresConfig,
}

impl Default for Example4Config {
    fn default() -> Self {
        Example4Config { layout: LayoutConfig::default(), ns: vec![150], h: 0.016, margin: 0.1, gmres: GmresConfig::default() }
    }
}

/// One stokeslet at each body's center, with strengths from a fixed
/// low-discrepancy sequence.
pub fn centered_stokeslets(curves: &[Curve]) -> Vec<Stokeslet> {
    curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let z = c.centroid();
            let k = (i + 1) as f64;
            let phi = 2.0 * PI * (0.569_840_290_998 * k).fract();
            let mag = 0.5 + 0.5 * (0.438_579_0 * k).fract();
            Stokeslet { position: [z.re, z.im], force: [mag * phi.cos(), mag * phi.sin()] }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Example4Run {
    pub n: usize,
    pub bodies: usize,
    pub min_gap: f64,
    pub iterations: usize,
    pub gmres_residual: f64,
    pub grid: ErrorGrid,
    pub seconds: f64,
}

fn bounding_grid(curves: &[Curve], h: f64, margin: f64) -> GridSpec {
    let (mut lo, mut hi) = (C64::new(f64::INFINITY, f64::INFINITY), C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for y in curves.iter().flat_map(|c| c.nodes()) {
        lo = C64::new(lo.re.min(y.re), lo.im.min(y.im));
        hi = C64::new(hi.re.max(y.re), hi.im.max(y.im));
    }
    GridSpec { x: [lo.re - margin, hi.re + margin], y: [lo.im - margin, hi.im + margin], h }
}

fn classify(curves: &[Curve], x: C64) -> PointClass {
    let mut class = PointClass::Exterior;
    for c in curves {
        match c.locate(x) {
            Location::Interior => return PointClass::Interior,
            Location::Node(_) => class = PointClass::Node,
            Location::Exterior => {}
        }
    }
    class
}

pub fn run_once(cfg: &Example4Config, n: usize) -> Result<Example4Run> {
    let start = Instant::now();
    let layout = ellipse_layout(&LayoutConfig { n, ..cfg.layout })?;
    let curves: Vec<Curve> = layout.specs.iter().map(|s| s.build()).collect::<layerpot::Result<_>>()?;
    let reference = ReferenceField::StokesletSum { stokeslets: centered_stokeslets(&curves) };
    let data: Vec<Vec<[f64; 2]>> =
        curves.iter().map(|c| c.nodes().iter().map(|&y| reference.velocity(y).expect("stokes field")).collect()).collect();
    let op = MultibodyOperator::new(curves.clone(), CloseOptions::default(), DEFAULT_BETA)?;
    let sol = solve_with_operator(&op, &data, &cfg.gmres)?;
    log::info!("K={} N={n}: {} GMRES iterations, residual {:.1e}", curves.len(), sol.gmres.iterations, sol.gmres.residual);
    let sigmas = sol.sigmas();
    let grid = ErrorGrid::build(
        bounding_grid(&curves, cfg.h, cfg.margin),
        |x| classify(&curves, x),
        |c| c != PointClass::Interior,
        |pts| {
            let u = op.velocity(&sigmas, pts)?;
            Ok(pts
                .iter()
                .zip(&u)
                .map(|(&x, v)| {
                    let r = reference.velocity(x).expect("stokes field");
                    (v[0] - r[0]).hypot(v[1] - r[1])
                })
                .collect())
        },
    )?;
    Ok(Example4Run {
        n,
        bodies: curves.len(),
        min_gap: layout.min_gap,
        iterations: sol.gmres.iterations,
        gmres_residual: sol.gmres.residual,
        grid,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run(cfg: &Example4Config) -> Result<Vec<Example4Run>> {
    cfg.ns.iter().map(|&n| run_once(cfg, n)).collect()
}

pub fn rows(runs: &[Example4Run]) -> Vec<ConvergenceRow> {
    runs.iter().map(|r| ConvergenceRow::new(r.n, format!("K={}", r.bodies), "u", r.grid.max_error())).collect()
}

pub fn check(run: &Example4Run, cfg: &Example4Config) -> Vec<Check> {
    vec![
        Check::at_least("bodies", run.bodies as f64, 6.0),
        Check::at_most("minimum gap", run.min_gap, cfg.layout.gap * (1.0 + 1e-6)),
        Check::at_most(format!("grid error at N={}", run.n), run.grid.max_error(), 1e-9),
    ]
}
