//! Barycentric Cauchy evaluation near a node: value, compensated derivative
//! and the uncompensated derivative, inside and outside a star.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use layerpot::cauchy::{evaluate, Mode};
use layerpot::{CurveSpec, ExteriorAnchor, Side, TargetBatch, C64};
use serde::{Deserialize, Serialize};

use super::Check;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CauchyConfig {
    pub curve: CurveSpec,
    /// Pole outside the curve, for the interior test.
    pub interior_pole: [f64; 2],
    /// Pole inside the curve, for the exterior test.
    pub exterior_pole: [f64; 2],
    pub anchor: [f64; 2],
    pub distances: Vec<f64>,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        CauchyConfig {
            curve: CurveSpec::star(0.3, 5, 200),
            interior_pole: [1.1, 1.0],
            exterior_pole: [0.1, 0.5],
            anchor: [-0.1, 0.0],
            distances: vec![0.0, 1e-16, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyRow {
    pub distance: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub side: Side,
    /// `value`, `derivative` or `derivative_unstabilized`.
    pub quantity: &'static str,
    pub abs_err: f64,
}

pub fn run(cfg: &CauchyConfig) -> Result<Vec<CauchyRow>> {
    let curve = cfg.curve.build()?;
    let mut rows = Vec::new();
    for side in [Side::Interior, Side::Exterior] {
        let b = match side {
            Side::Interior => C64::new(cfg.interior_pole[0], cfg.interior_pole[1]),
            Side::Exterior => C64::new(cfg.exterior_pole[0], cfg.exterior_pole[1]),
        };
        let v: Vec<C64> = curve.nodes().iter().map(|y| 1.0 / (y - b)).collect();
        // march along the ray from the origin through the node nearest the pole
        let k = (0..curve.n()).min_by(|&i, &j| (curve.nodes()[i] - b).norm().total_cmp(&(curve.nodes()[j] - b).norm())).unwrap();
        let y = curve.nodes()[k];
        let dir = y / y.norm();
        let pts: Vec<C64> = cfg
            .distances
            .iter()
            .map(|&d| match side {
                Side::Interior => y - d * dir,
                Side::Exterior => y + d * dir,
            })
            .collect();
        let batch = TargetBatch::new(pts.clone(), side);
        let anchor = match side {
            Side::Interior => None,
            Side::Exterior => Some(ExteriorAnchor::new(&curve, C64::new(cfg.anchor[0], cfg.anchor[1]), ExteriorAnchor::DEFAULT_RATIO)?),
        };
        let full = evaluate(&curve, &[&v], &batch, anchor.as_ref(), Mode::FULL)?.remove(0);
        let raw = evaluate(&curve, &[&v], &batch, anchor.as_ref(), Mode::UNSTABILIZED)?.remove(0);
        for (t, (&x, &d)) in pts.iter().zip(&cfg.distances).enumerate() {
            let (val, der) = (1.0 / (x - b), -1.0 / ((x - b) * (x - b)));
            for (quantity, e) in [
                ("value", (full.values[t] - val).norm()),
                ("derivative", (full.derivatives[t] - der).norm()),
                ("derivative_unstabilized", (raw.derivatives[t] - der).norm()),
            ] {
                rows.push(CauchyRow { distance: d, n: curve.n(), side, quantity, abs_err: e });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[CauchyRow], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "distance,N,side,quantity,abs_err,log10_err")?;
    for r in rows {
        let side = if r.side == Side::Interior { "interior" } else { "exterior" };
        writeln!(w, "{:e},{},{},{},{:e},{:.3}", r.distance, r.n, side, r.quantity, r.abs_err, crate::grid::log10_err(r.abs_err))?;
    }
    w.flush()?;
    Ok(())
}

fn max_err(rows: &[CauchyRow], side: Side, quantity: &str) -> f64 {
    rows.iter().filter(|r| r.side == side && r.quantity == quantity).map(|r| r.abs_err).fold(0.0, f64::max)
}

/// Value accuracy at every distance.
pub fn check_value(rows: &[CauchyRow]) -> Vec<Check> {
    vec![
        Check::at_most("interior value, all distances", max_err(rows, Side::Interior, "value"), 1e-13),
        Check::at_most("exterior value, all distances", max_err(rows, Side::Exterior, "value"), 1e-13),
    ]
}

/// Compensated derivative accuracy, and the failure of the uncompensated one.
pub fn check_derivative(rows: &[CauchyRow]) -> Vec<Check> {
    let raw = rows
        .iter()
        .filter(|r| r.side == Side::Interior && r.quantity == "derivative_unstabilized" && r.distance == 1e-12)
        .map(|r| r.abs_err)
        .fold(0.0, f64::max);
    vec![
        Check::at_most("interior derivative, all distances", max_err(rows, Side::Interior, "derivative"), 1e-12),
        Check::at_most("exterior derivative, all distances", max_err(rows, Side::Exterior, "derivative"), 1e-12),
        Check::new("uncompensated derivative at 1e-12 exceeds 1e-4", raw > 1e-4, format!("{raw:.3e} > 1e-4")),
    ]
}
