//! Barycentric-type evaluation of Cauchy integrals and their derivatives from
//! boundary values, stable arbitrarily close to (and on) the nodes.
//!
//! Every sum uses the complex element `dy_j = Z'(s_j)·2π/N`. With
//! `c_j = dy_j/(y_j − x)` the interior value is `Σ v_j c_j / Σ c_j`; outside,
//! the denominator reproduces `p(x) = 1/(x − a)` for an interior anchor `a`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};

/// Near-node threshold below which derivative terms are compensated.
pub const DEFAULT_DELTA: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

/// Targets evaluated from one side of the curve.
#[derive(Debug, Clone)]
pub struct TargetBatch {
    pub points: Vec<C64>,
    pub side: Side,
    pub delta: f64,
}

impl TargetBatch {
    pub fn new(points: Vec<C64>, side: Side) -> Self {
        TargetBatch { points, side, delta: DEFAULT_DELTA }
    }

    pub fn interior(points: Vec<C64>) -> Self {
        Self::new(points, Side::Interior)
    }

    pub fn exterior(points: Vec<C64>) -> Self {
        Self::new(points, Side::Exterior)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Node index each target coincides with, if any.
    pub fn node_hits(&self, curve: &Curve) -> Vec<Option<usize>> {
        self.points.iter().map(|&x| curve.node_hit(x)).collect()
    }

    /// Nodes within `delta` of each target.
    pub fn near_flags(&self, curve: &Curve) -> Vec<Vec<usize>> {
        self.points
            .iter()
            .map(|&x| (0..curve.n()).filter(|&j| (curve.nodes()[j] - x).norm() < self.delta).collect())
            .collect()
    }
}

/// Interior point `a` used to build the exterior denominator `1/(x − a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorAnchor {
    a: C64,
}

impl ExteriorAnchor {
    pub const DEFAULT_RATIO: f64 = 0.2;

    /// Validates that `a` is enclosed and at least `min_ratio` diameters from
    /// every node.
    pub fn new(curve: &Curve, a: C64, min_ratio: f64) -> Result<Self> {
        let w = curve.winding_number(a);
        if (w - 1.0).norm() >= 0.5 {
            return Err(Error::Anchor(format!("{a} is not enclosed (winding number {w})")));
        }
        let dmin = curve.nodes().iter().map(|y| (y - a).norm()).fold(f64::INFINITY, f64::min);
        let diam = curve.diameter();
        if dmin < min_ratio * diam {
            return Err(Error::Anchor(format!(
                "{a} is {dmin:.3e} from the curve, below {min_ratio} x diameter {diam:.3e}"
            )));
        }
        Ok(ExteriorAnchor { a })
    }

    /// Node centroid with the default distance ratio.
    pub fn centroid(curve: &Curve) -> Result<Self> {
        Self::new(curve, curve.centroid(), Self::DEFAULT_RATIO)
    }

    pub fn point(&self) -> C64 {
        self.a
    }
}

/// Values and (optionally) derivatives of a holomorphic function at targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Holomorphic {
    pub values: Vec<C64>,
    pub derivatives: Vec<C64>,
}

/// What [`evaluate`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub derivative: bool,
    /// Compensate near-node derivative terms (off only for demonstrations).
    pub stabilized: bool,
}

impl Mode {
    pub const VALUE: Mode = Mode { derivative: false, stabilized: true };
    pub const FULL: Mode = Mode { derivative: true, stabilized: true };
    pub const UNSTABILIZED: Mode = Mode { derivative: true, stabilized: false };
}

struct Ctx<'a> {
    y: &'a [C64],
    dy: &'a [C64],
    /// `1/(y_j − a)` outside, absent inside.
    p: Option<(C64, Vec<C64>)>,
    delta: f64,
    mode: Mode,
}

fn node_derivative_interior(ctx: &Ctx, v: &[C64], i: usize) -> C64 {
    let (yi, vi) = (ctx.y[i], v[i]);
    let mut s = C64::new(0.0, 0.0);
    for j in 0..ctx.y.len() {
        if j != i {
            s += (v[j] - vi) * ctx.dy[j] / (ctx.y[j] - yi);
        }
    }
    -s / ctx.dy[i]
}

/// Exterior node derivative through `F(x) = (x − a)v(x)`, which is an
/// interior-type barycentric interpolant with weights `dy_j/(y_j − a)`.
fn node_derivative_exterior(ctx: &Ctx, a: C64, p: &[C64], v: &[C64], i: usize) -> C64 {
    let yi = ctx.y[i];
    let phi_i = (yi - a) * v[i];
    let mut s = C64::new(0.0, 0.0);
    for j in 0..ctx.y.len() {
        if j != i {
            let phi_j = (ctx.y[j] - a) * v[j];
            s += (phi_j - phi_i) * ctx.dy[j] * p[j] / (ctx.y[j] - yi);
        }
    }
    let f_prime = -s / (ctx.dy[i] * p[i]);
    (f_prime - v[i]) / (yi - a)
}

fn eval_target(ctx: &Ctx, data: &[&[C64]], x: C64, hit: Option<usize>) -> (Vec<C64>, Vec<C64>) {
    let n = ctx.y.len();
    let nd = data.len();
    let mut vals = vec![C64::new(0.0, 0.0); nd];
    let mut ders = vec![C64::new(0.0, 0.0); if ctx.mode.derivative { nd } else { 0 }];
    if let Some(i) = hit {
        for (d, v) in data.iter().enumerate() {
            vals[d] = v[i];
            if ctx.mode.derivative {
                ders[d] = match &ctx.p {
                    None => node_derivative_interior(ctx, v, i),
                    Some((a, p)) => node_derivative_exterior(ctx, *a, p, v, i),
                };
            }
        }
        return (vals, ders);
    }
    let c: Vec<C64> = (0..n).map(|j| ctx.dy[j] / (ctx.y[j] - x)).collect();
    let den: C64 = match &ctx.p {
        None => c.iter().sum(),
        Some((_, p)) => c.iter().zip(p).map(|(c, p)| c * p).sum(),
    };
    let xa = ctx.p.as_ref().map(|(a, _)| x - a);
    for (d, v) in data.iter().enumerate() {
        let num: C64 = v.iter().zip(&c).map(|(v, c)| v * c).sum();
        vals[d] = match xa {
            None => num / den,
            Some(xa) => num / den / xa,
        };
    }
    if !ctx.mode.derivative {
        return (vals, ders);
    }
    let near: Vec<usize> =
        if ctx.mode.stabilized { (0..n).filter(|&j| (ctx.y[j] - x).norm() < ctx.delta).collect() } else { Vec::new() };
    for (d, v) in data.iter().enumerate() {
        let vx = vals[d];
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let r = ctx.y[j] - x;
            let diff = if near.contains(&j) {
                let mut s = C64::new(0.0, 0.0);
                match &ctx.p {
                    None => {
                        for k in 0..n {
                            if k != j {
                                s += (v[j] - v[k]) * c[k];
                            }
                        }
                        s / den
                    }
                    Some((a, p)) => {
                        let vja = v[j] * (ctx.y[j] - a);
                        for k in 0..n {
                            if k != j {
                                s += (vja * p[k] - v[k]) * c[k];
                            }
                        }
                        (s / den - r * v[j]) / xa.expect("exterior")
                    }
                }
            } else {
                v[j] - vx
            };
            acc += diff * c[j] / r;
        }
        ders[d] = match xa {
            None => acc / den,
            Some(xa) => acc / den / xa,
        };
    }
    (vals, ders)
}

/// Evaluates one or more holomorphic functions from their boundary values.
///
/// Interior targets need `anchor = None` and interior limits `v⁻`; exterior
/// targets need an anchor and exterior limits `v⁺` of a function vanishing
/// at infinity.
pub fn evaluate(
    curve: &Curve,
    data: &[&[C64]],
    targets: &TargetBatch,
    anchor: Option<&ExteriorAnchor>,
    mode: Mode,
) -> Result<Vec<Holomorphic>> {
    for v in data {
        curve.check_len(v.len())?;
    }
    let p = match (targets.side, anchor) {
        (Side::Interior, None) => None,
        (Side::Exterior, Some(a)) => {
            let a = a.point();
            Some((a, curve.nodes().iter().map(|y| 1.0 / (y - a)).collect()))
        }
        (Side::Exterior, None) => return Err(Error::Anchor("required for exterior targets".into())),
        (Side::Interior, Some(_)) => return Err(Error::SideMismatch),
    };
    let ctx = Ctx { y: curve.nodes(), dy: curve.dy(), p, delta: targets.delta, mode };
    let per_target: Vec<(Vec<C64>, Vec<C64>)> =
        targets.points.par_iter().map(|&x| eval_target(&ctx, data, x, curve.node_hit(x))).collect();
    let mut out = vec![Holomorphic::default(); data.len()];
    for (vals, ders) in per_target {
        for (d, h) in out.iter_mut().enumerate() {
            h.values.push(vals[d]);
            if mode.derivative {
                h.derivatives.push(ders[d]);
            }
        }
    }
    Ok(out)
}

fn single(curve: &Curve, v: &[C64], targets: &TargetBatch, anchor: Option<&ExteriorAnchor>, mode: Mode) -> Result<Holomorphic> {
    Ok(evaluate(curve, &[v], targets, anchor, mode)?.pop().expect("one dataset"))
}

fn require(targets: &TargetBatch, side: Side) -> Result<()> {
    if targets.side == side {
        Ok(())
    } else {
        Err(Error::SideMismatch)
    }
}

pub fn cauchy_value_interior(curve: &Curve, v_minus: &[C64], targets: &TargetBatch) -> Result<Vec<C64>> {
    require(targets, Side::Interior)?;
    Ok(single(curve, v_minus, targets, None, Mode::VALUE)?.values)
}

pub fn cauchy_value_exterior(
    curve: &Curve,
    v_plus: &[C64],
    targets: &TargetBatch,
    anchor: &ExteriorAnchor,
) -> Result<Vec<C64>> {
    require(targets, Side::Exterior)?;
    Ok(single(curve, v_plus, targets, Some(anchor), Mode::VALUE)?.values)
}

pub fn cauchy_derivative_interior(curve: &Curve, v_minus: &[C64], targets: &TargetBatch) -> Result<Vec<C64>> {
    require(targets, Side::Interior)?;
    Ok(single(curve, v_minus, targets, None, Mode::FULL)?.derivatives)
}

pub fn cauchy_derivative_exterior(
    curve: &Curve,
    v_plus: &[C64],
    targets: &TargetBatch,
    anchor: &ExteriorAnchor,
) -> Result<Vec<C64>> {
    require(targets, Side::Exterior)?;
    Ok(single(curve, v_plus, targets, Some(anchor), Mode::FULL)?.derivatives)
}

/// Plain trapezoid Cauchy integral `±(1/2πi)Σ v_j dy_j/(y_j − x)`, the
/// uncompensated rule (sign + inside, − outside).
pub fn cauchy_native(curve: &Curve, v: &[C64], x: C64, side: Side) -> C64 {
    let s: C64 = curve.nodes().iter().zip(curve.dy()).zip(v).map(|((y, d), v)| v * d / (y - x)).sum();
    let s = s / C64::new(0.0, 2.0 * PI);
    match side {
        Side::Interior => s,
        Side::Exterior => -s,
    }
}
