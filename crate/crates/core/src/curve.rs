//! Closed smooth curves discretized by the N-point periodic trapezoid rule.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, freq};

/// Relative distance below which a target is treated as sitting on a node.
pub const NODE_SNAP: f64 = 1e-15;

fn one() -> f64 {
    1.0
}

/// Analytic curve families, as they appear in run-config JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CurveSpec {
    /// Polar curve `r(s) = scale·(1 + amplitude·cos(frequency·s))`.
    Star {
        amplitude: f64,
        frequency: u32,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        angle: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `a cos s + i b sin s`, rotated by `angle` and moved to `center`.
    Ellipse {
        a: f64,
        b: f64,
        #[serde(rename = "N")]
        n: usize,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        angle: f64,
    },
}

impl CurveSpec {
    pub fn star(amplitude: f64, frequency: u32, n: usize) -> Self {
        CurveSpec::Star { amplitude, frequency, n, center: [0.0, 0.0], angle: 0.0, scale: 1.0 }
    }

    pub fn ellipse(a: f64, b: f64, n: usize) -> Self {
        CurveSpec::Ellipse { a, b, n, center: [0.0, 0.0], angle: 0.0 }
    }

    pub fn n(&self) -> usize {
        match self {
            CurveSpec::Star { n, .. } | CurveSpec::Ellipse { n, .. } => *n,
        }
    }

    /// Same family with a different node count.
    pub fn with_n(&self, m: usize) -> Self {
        let mut s = self.clone();
        match &mut s {
            CurveSpec::Star { n, .. } | CurveSpec::Ellipse { n, .. } => *n = m,
        }
        s
    }

    /// Moves the curve rigidly: rotate by `angle` about its own center, then
    /// translate the center to `center`.
    pub fn placed(&self, new_center: [f64; 2], new_angle: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            CurveSpec::Star { center, angle, .. } | CurveSpec::Ellipse { center, angle, .. } => {
                *center = new_center;
                *angle = new_angle;
            }
        }
        s
    }

    /// `(Z, Z', Z'')` at parameter `s`.
    pub fn eval(&self, s: f64) -> (C64, C64, C64) {
        match *self {
            CurveSpec::Star { amplitude, frequency, center, angle, scale, .. } => {
                let f = frequency as f64;
                let r = 1.0 + amplitude * (f * s).cos();
                let rp = -amplitude * f * (f * s).sin();
                let rpp = -amplitude * f * f * (f * s).cos();
                let e = C64::from_polar(scale, s + angle);
                let c = C64::new(center[0], center[1]);
                (c + e * r, e * C64::new(rp, r), e * C64::new(rpp - r, 2.0 * rp))
            }
            CurveSpec::Ellipse { a, b, center, angle, .. } => {
                let rot = C64::from_polar(1.0, angle);
                let (sn, cs) = s.sin_cos();
                let c = C64::new(center[0], center[1]);
                (c + rot * C64::new(a * cs, b * sn), rot * C64::new(-a * sn, b * cs), rot * C64::new(-a * cs, -b * sn))
            }
        }
    }

    pub fn build(&self) -> Result<Curve> {
        build_analytic_curve(self)
    }
}

/// Where a point lies relative to a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Exterior,
    Node(usize),
}

/// Node-wise data of a discretized closed curve. Immutable once built.
#[derive(Debug, Clone)]
pub struct Curve {
    params: Vec<f64>,
    nodes: Vec<C64>,
    d_nodes: Vec<C64>,
    accel: Vec<C64>,
    speed: Vec<f64>,
    weights: Vec<f64>,
    normals: Vec<C64>,
    curvature: Vec<f64>,
    dy: Vec<C64>,
    coeffs: Vec<(i64, C64)>,
}

/// Builds a curve from an analytic family, using closed-form derivatives.
pub fn build_analytic_curve(spec: &CurveSpec) -> Result<Curve> {
    match *spec {
        CurveSpec::Ellipse { a, b, .. } if !(a > 0.0 && b > 0.0) => {
            return Err(Error::InvalidCurve(format!("ellipse semi-axes must be positive, got ({a}, {b})")))
        }
        CurveSpec::Star { amplitude, scale, .. } if !(amplitude.abs() < 1.0 && scale > 0.0) => {
            return Err(Error::InvalidCurve(format!("star needs |amplitude| < 1 and scale > 0, got ({amplitude}, {scale})")))
        }
        _ => {}
    }
    Curve::from_fn(spec.n(), |s| spec.eval(s))
}

/// Speed, outward normal and curvature from `Z'` and `Z''`.
pub fn geometric_data(d_nodes: &[C64], accel: &[C64]) -> Result<(Vec<f64>, Vec<C64>, Vec<f64>)> {
    let speed: Vec<f64> = d_nodes.iter().map(|z| z.norm()).collect();
    let min = speed.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min >= 1e-12) {
        return Err(Error::Degenerate(min));
    }
    let normals = d_nodes.iter().zip(&speed).map(|(z, s)| -C64::i() * z / s).collect();
    let curvature = d_nodes.iter().zip(accel).zip(&speed).map(|((zp, zpp), s)| (zp.conj() * zpp).im / (s * s * s)).collect();
    Ok((speed, normals, curvature))
}

fn check_n(n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        Err(Error::BadNodeCount(n))
    } else {
        Ok(())
    }
}

impl Curve {
    /// Samples `f(s) = (Z, Z', Z'')` at `s_j = 2πj/N`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> (C64, C64, C64)) -> Result<Curve> {
        check_n(n)?;
        let params: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let (mut nodes, mut d_nodes, mut accel) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &s in &params {
            let (z, zp, zpp) = f(s);
            nodes.push(z);
            d_nodes.push(zp);
            accel.push(zpp);
        }
        Curve::assemble(params, nodes, d_nodes, accel)
    }

    /// Builds a curve from node samples alone; derivatives are spectral, with
    /// coefficients at the roundoff floor discarded.
    pub fn from_samples(nodes: Vec<C64>) -> Result<Curve> {
        let n = nodes.len();
        check_n(n)?;
        let (d_nodes, accel) = spectral::derivatives_filtered(&nodes, 1e-15)?;
        let params = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        Curve::assemble(params, nodes, d_nodes, accel)
    }

    fn assemble(params: Vec<f64>, nodes: Vec<C64>, d_nodes: Vec<C64>, accel: Vec<C64>) -> Result<Curve> {
        let n = nodes.len();
        if nodes.iter().chain(&d_nodes).chain(&accel).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidCurve("non-finite samples".into()));
        }
        let (speed, normals, curvature) = geometric_data(&d_nodes, &accel)?;
        let area: f64 = (0..n).map(|j| (nodes[j].conj() * nodes[(j + 1) % n]).im).sum::<f64>() * 0.5;
        if area <= 0.0 {
            return Err(Error::Clockwise(area));
        }
        let h = 2.0 * PI / n as f64;
        let weights = speed.iter().map(|s| s * h).collect();
        let dy = d_nodes.iter().map(|z| z * h).collect();
        let mut c = nodes.clone();
        spectral::fft(&mut c);
        let mut coeffs = Vec::with_capacity(n + 1);
        for (k, ck) in c.iter().enumerate() {
            let m = freq(k, n);
            let ck = ck / n as f64;
            if 2 * m.unsigned_abs() as usize == n {
                coeffs.push((m, 0.5 * ck));
                coeffs.push((-m, 0.5 * ck));
            } else {
                coeffs.push((m, ck));
            }
        }
        Ok(Curve { params, nodes, d_nodes, accel, speed, weights, normals, curvature, dy, coeffs })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }
    pub fn d_nodes(&self) -> &[C64] {
        &self.d_nodes
    }
    pub fn accel(&self) -> &[C64] {
        &self.accel
    }
    pub fn speed(&self) -> &[f64] {
        &self.speed
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn normals(&self) -> &[C64] {
        &self.normals
    }
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }
    /// Complex quadrature element `Z'(s_j)·2π/N = i n_j w_j`.
    pub fn dy(&self) -> &[C64] {
        &self.dy
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn centroid(&self) -> C64 {
        self.nodes.iter().sum::<C64>() / self.n() as f64
    }

    /// Largest distance between two nodes.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Trapezoid approximation of `(1/2πi)∮ dy/(y − x)`.
    pub fn winding_number(&self, x: C64) -> C64 {
        let s: C64 = self.nodes.iter().zip(&self.dy).map(|(y, d)| d / (y - x)).sum();
        s / C64::new(0.0, 2.0 * PI)
    }

    /// Trigonometric interpolant of the node samples and its first two
    /// derivatives at parameter `s`.
    pub fn interpolate(&self, s: f64) -> (C64, C64, C64) {
        let mut z = C64::new(0.0, 0.0);
        let mut zp = z;
        let mut zpp = z;
        for &(k, c) in &self.coeffs {
            let kf = k as f64;
            let t = c * C64::from_polar(1.0, kf * s);
            z += t;
            zp += t * C64::new(0.0, kf);
            zpp -= t * (kf * kf);
        }
        (z, zp, zpp)
    }

    /// Index of a node that `x` coincides with (to relative tolerance
    /// [`NODE_SNAP`]), if any.
    pub fn node_hit(&self, x: C64) -> Option<usize> {
        self.nodes.iter().position(|&y| y == x || (y - x).norm() <= NODE_SNAP * y.norm().max(1.0))
    }

    /// Parameter of the point on the interpolated curve nearest to `x`,
    /// refined by Newton's method from the nearest node.
    pub fn nearest_param(&self, x: C64) -> f64 {
        let j = self
            .nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).norm_sqr().total_cmp(&(b.1 - x).norm_sqr()))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let h = 2.0 * PI / self.n() as f64;
        let mut s = self.params[j];
        for _ in 0..50 {
            let (z, zp, zpp) = self.interpolate(s);
            let r = z - x;
            let g1 = (r.conj() * zp).re;
            let g2 = zp.norm_sqr() + (r.conj() * zpp).re;
            let step = if g2 > 0.0 { g1 / g2 } else { g1.signum() * 0.1 * h };
            let step = step.clamp(-h, h);
            s -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        s
    }

    /// Signed distance-like side test: positive outside.
    fn side_by_projection(&self, x: C64) -> f64 {
        let s = self.nearest_param(x);
        let (z, zp, _) = self.interpolate(s);
        // outward normal is -i Z'
        ((x - z).conj() * (-C64::i() * zp)).re
    }

    /// Classifies `x` as a node, interior or exterior point. Far points use
    /// a crossing-number test on the node polygon; points within a few node
    /// spacings of the curve are resolved against the trigonometric
    /// interpolant.
    pub fn locate(&self, x: C64) -> Location {
        if let Some(i) = self.node_hit(x) {
            return Location::Node(i);
        }
        let n = self.n();
        let mut dmin = f64::INFINITY;
        let mut hmax: f64 = 0.0;
        for j in 0..n {
            dmin = dmin.min((self.nodes[j] - x).norm());
            hmax = hmax.max((self.nodes[(j + 1) % n] - self.nodes[j]).norm());
        }
        if dmin < 3.0 * hmax {
            return if self.side_by_projection(x) > 0.0 { Location::Exterior } else { Location::Interior };
        }
        let mut inside = false;
        for j in 0..n {
            let a = self.nodes[j];
            let b = self.nodes[(j + 1) % n];
            if (a.im > x.im) != (b.im > x.im) {
                let t = (x.im - a.im) / (b.im - a.im);
                if x.re < a.re + t * (b.re - a.re) {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    /// Curve through the trigonometric interpolant of this curve's nodes,
    /// sampled at `m` points (geometry regenerated spectrally).
    pub fn resampled(&self, m: usize) -> Result<Curve> {
        let nodes = spectral::resample_to(&self.nodes, m)?;
        Curve::from_samples(nodes)
    }

    /// Checks that a density has one sample per node.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            Err(Error::LengthMismatch { expected: self.n(), got: len })
        } else {
            Ok(())
        }
    }
}

/// Samples of a density on a curve's nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Real(Vec<f64>),
    Complex(Vec<C64>),
    Vector(Vec<[f64; 2]>),
}

impl Density {
    pub fn len(&self) -> usize {
        match self {
            Density::Real(v) => v.len(),
            Density::Complex(v) => v.len(),
            Density::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Density::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[[f64; 2]]> {
        match self {
            Density::Vector(v) => Some(v),
            _ => None,
        }
    }
}
