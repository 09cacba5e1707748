//! Experiment drivers. Each returns plain data; writing files and judging
//! thresholds are separate steps.

pub mod cauchy;
pub mod example4;
pub mod laplace;
pub mod stokes;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use layerpot::bie::{assemble, deinterleave, solve_least_squares, BvpSpec, Equation, RESIDUAL_TOL};
use layerpot::Density;
use serde::Serialize;

/// One line of a convergence file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub case: String,
    pub quantity: String,
    pub max_abs_err: f64,
}

impl ConvergenceRow {
    pub fn new(n: usize, case: impl Into<String>, quantity: impl Into<String>, max_abs_err: f64) -> Self {
        ConvergenceRow { n, case: case.into(), quantity: quantity.into(), max_abs_err }
    }
}

pub fn write_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "N,case,quantity,max_abs_err")?;
    for r in rows {
        writeln!(w, "{},{},{},{:e}", r.n, r.case, r.quantity, r.max_abs_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Looks up one entry of a convergence table.
pub fn lookup(rows: &[ConvergenceRow], n: usize, case: &str, quantity: &str) -> Option<f64> {
    rows.iter().find(|r| r.n == n && r.case == case && r.quantity == quantity).map(|r| r.max_abs_err)
}

/// Outcome of one threshold check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }

    /// `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value <= limit, format!("{value:.3e} <= {limit:.1e}"))
    }

    /// `value ≥ limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check::new(name, value >= limit, format!("{value:.3e} >= {limit:.1e}"))
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Dense solve that keeps under-resolved solutions. A convergence sweep
/// starts below the resolution where the residual certificate holds, so a
/// residual above `RESIDUAL_TOL` is logged instead of rejected.
pub fn solve_sweep(spec: &BvpSpec) -> Result<(Density, f64)> {
    let sys = assemble(spec)?;
    let (x, residual) = solve_least_squares(&sys.matrix, &sys.rhs);
    if !(residual <= RESIDUAL_TOL) {
        log::warn!("N={}: residual {residual:.1e} above {RESIDUAL_TOL:.0e}", spec.curves[0].n());
    }
    let density = match spec.equation {
        Equation::Laplace => Density::Real(x.as_slice().to_vec()),
        Equation::Stokes => Density::Vector(deinterleave(x.as_slice())),
    };
    Ok((density, residual))
}

/// Formats a list of errors as `[1.0e-3, ...]`.
pub fn fmt_errs(errs: &[f64]) -> String {
    let parts: Vec<String> = errs.iter().map(|e| format!("{e:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Error is non-increasing from its peak until it reaches `floor`.
pub fn decays_after_knee(errors: &[f64], floor: f64) -> bool {
    let Some(peak) = errors.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
        return true;
    };
    errors[peak..].windows(2).all(|w| w[1] <= w[0] || w[1] <= floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knee_detection() {
        assert!(decays_after_knee(&[1e-3, 1e-2, 1e-5, 1e-9, 1e-14, 2e-14], 1e-13));
        assert!(!decays_after_knee(&[1e-2, 1e-5, 1e-4, 1e-9], 1e-13));
        assert!(decays_after_knee(&[], 0.0));
    }

    #[test]
    fn csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_convergence_csv(&[ConvergenceRow::new(100, "DLP int", "u", 2.5e-7)], &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "N,case,quantity,max_abs_err\n100,DLP int,u,2.5e-7\n");
    }
}
