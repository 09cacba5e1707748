//! Error fields on uniform grids, written as CSV and P6 heatmaps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use layerpot::{Curve, Location, Side, C64};
use serde::{Deserialize, Serialize};

/// log10 of a zero error.
pub const LOG_FLOOR: f64 = -16.0;

/// Axis-aligned box sampled with spacing `h`, including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub h: f64,
}

impl GridSpec {
    pub fn square(half_width: f64, h: f64) -> Self {
        GridSpec { x: [-half_width, half_width], y: [-half_width, half_width], h }
    }

    fn count(lo: f64, hi: f64, h: f64) -> usize {
        ((hi - lo) / h + 1e-9).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::count(self.x[0], self.x[1], self.h)
    }

    pub fn ny(&self) -> usize {
        Self::count(self.y[0], self.y[1], self.h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !(self.x[1] >= self.x[0]) || !(self.y[1] >= self.y[0]) {
            bail!("grid needs h > 0 and a nonempty box, got {self:?}");
        }
        Ok(())
    }

    /// Points row by row, bottom row first.
    pub fn points(&self) -> Vec<C64> {
        let (nx, ny) = (self.nx(), self.ny());
        (0..ny)
            .flat_map(|j| (0..nx).map(move |i| C64::new(self.x[0] + i as f64 * self.h, self.y[0] + j as f64 * self.h)))
            .collect()
    }
}

/// Where a grid point belongs for error purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    Exterior,
    /// On a boundary node; counted on either side.
    Node,
}

impl PointClass {
    pub fn of(curve: &Curve, x: C64) -> Self {
        match curve.locate(x) {
            Location::Interior => PointClass::Interior,
            Location::Exterior => PointClass::Exterior,
            Location::Node(_) => PointClass::Node,
        }
    }

    pub fn matches(self, side: Side) -> bool {
        match self {
            PointClass::Node => true,
            PointClass::Interior => side == Side::Interior,
            PointClass::Exterior => side == Side::Exterior,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PointClass::Interior => "interior",
            PointClass::Exterior => "exterior",
            PointClass::Node => "node",
        }
    }
}

/// Absolute errors at grid points; `None` marks points that were not
/// evaluated (wrong side).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGrid {
    pub spec: GridSpec,
    pub errors: Vec<Option<f64>>,
    pub classes: Vec<PointClass>,
}

pub fn log10_err(e: f64) -> f64 {
    if e > 0.0 {
        e.log10().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

impl ErrorGrid {
    /// Evaluates `error_at` on all points whose class `keep` accepts.
    pub fn build(
        spec: GridSpec,
        classify: impl Fn(C64) -> PointClass + Sync,
        keep: impl Fn(PointClass) -> bool,
        error_at: impl FnOnce(&[C64]) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        use rayon::prelude::*;
        spec.validate()?;
        let pts = spec.points();
        let classes: Vec<PointClass> = pts.par_iter().map(|&x| classify(x)).collect();
        let idx: Vec<usize> = (0..pts.len()).filter(|&i| keep(classes[i])).collect();
        let sel: Vec<C64> = idx.iter().map(|&i| pts[i]).collect();
        let errs = error_at(&sel)?;
        if errs.len() != sel.len() {
            bail!("error callback returned {} values for {} points", errs.len(), sel.len());
        }
        let mut errors = vec![None; pts.len()];
        for (&i, e) in idx.iter().zip(errs) {
            errors[i] = Some(e);
        }
        Ok(ErrorGrid { spec, errors, classes })
    }

    /// Grid from two fields given pointwise, for plumbing checks.
    pub fn compare(spec: GridSpec, numeric: impl Fn(C64) -> f64, reference: impl Fn(C64) -> f64) -> Result<Self> {
        Self::build(spec, |_| PointClass::Exterior, |_| true, |pts| Ok(pts.iter().map(|&x| (numeric(x) - reference(x)).abs()).collect()))
    }

    pub fn evaluated(&self) -> impl Iterator<Item = f64> + '_ {
        self.errors.iter().flatten().copied()
    }

    pub fn max_error(&self) -> f64 {
        self.evaluated().fold(0.0, f64::max)
    }

    pub fn count(&self) -> usize {
        self.evaluated().count()
    }

    /// Fraction of evaluated points with error at most `tol`.
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let n = self.count();
        if n == 0 {
            return 1.0;
        }
        self.evaluated().filter(|&e| e <= tol).count() as f64 / n as f64
    }

    pub fn log10(&self) -> Vec<Option<f64>> {
        self.errors.iter().map(|e| e.map(log10_err)).collect()
    }

    /// `x,y,log10_err,side`; unevaluated points carry `nan`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x,y,log10_err,side")?;
        for ((x, e), c) in self.spec.points().iter().zip(self.log10()).zip(&self.classes) {
            match e {
                Some(v) => writeln!(w, "{},{},{:.6},{}", x.re, x.im, v, c.label())?,
                None => writeln!(w, "{},{},nan,{}", x.re, x.im, c.label())?,
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Heatmap of log10 error clamped to `[lo, hi]`, top row = largest y.
    /// The file is named `{stem}_log10_{lo}_{hi}.ppm` inside `dir`.
    pub fn write_ppm(&self, dir: &Path, stem: &str, lo: f64, hi: f64) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}_log10_{lo}_{hi}.ppm"));
        let (nx, ny) = (self.spec.nx(), self.spec.ny());
        let logs = self.log10();
        let mut w = BufWriter::new(File::create(&path)?);
        write!(w, "P6\n{nx} {ny}\n255\n")?;
        for j in (0..ny).rev() {
            for i in 0..nx {
                let rgb = match logs[j * nx + i] {
                    Some(v) => colormap(((v - lo) / (hi - lo)).clamp(0.0, 1.0)),
                    None => [255, 255, 255],
                };
                w.write_all(&rgb)?;
            }
        }
        w.flush()?;
        Ok(path)
    }
}

/// Piecewise-linear blue, cyan, green, yellow, red ramp on `[0, 1]`.
pub fn colormap(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [[0.0, 0.0, 0.5], [0.0, 0.8, 1.0], [0.2, 0.8, 0.2], [1.0, 0.9, 0.0], [0.7, 0.0, 0.0]];
    let s = t * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - k as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = ((STOPS[k][c] * (1.0 - f) + STOPS[k + 1][c] * f) * 255.0).round() as u8;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_fields_sit_at_floor() {
        let g = ErrorGrid::compare(GridSpec::square(1.0, 0.25), |x| x.re.sin(), |x| x.re.sin()).unwrap();
        assert_eq!(g.count(), 81);
        assert!(g.log10().iter().all(|v| *v == Some(LOG_FLOOR)));
    }

    #[test]
    fn uniform_offset() {
        let g = ErrorGrid::compare(GridSpec::square(1.0, 0.5), |_| 1.0 + 1e-6, |_| 1.0).unwrap();
        assert!(g.log10().iter().all(|v| (v.unwrap() + 6.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(ErrorGrid::compare(GridSpec::square(1.0, 0.0), |_| 0.0, |_| 0.0).is_err());
        assert!(ErrorGrid::compare(GridSpec::square(1.0, -0.1), |_| 0.0, |_| 0.0).is_err());
    }

    #[test]
    fn table_grid_size() {
        let g = GridSpec::square(1.5, 0.01);
        assert_eq!((g.nx(), g.ny()), (301, 301));
        let p = g.points();
        assert_eq!(p[0], C64::new(-1.5, -1.5));
        assert!((p[300] - C64::new(1.5, -1.5)).norm() < 1e-12);
    }

    #[test]
    fn ppm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = ErrorGrid::compare(GridSpec { x: [0.0, 2.0], y: [0.0, 1.0], h: 1.0 }, |x| x.re * 1e-3, |_| 0.0).unwrap();
        let path = g.write_ppm(dir.path(), "t", -16.0, 0.0).unwrap();
        assert!(path.file_name().unwrap().to_str().unwrap().contains("log10_-16_0"));
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 3 * 6);
        g.write_csv(&dir.path().join("t.csv")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(csv.starts_with("x,y,log10_err,side\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn colormap_ends() {
        assert_eq!(colormap(0.0), [0, 0, 128]);
        assert_eq!(colormap(1.0), [179, 0, 0]);
    }
}
