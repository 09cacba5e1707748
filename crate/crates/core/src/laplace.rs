//! Close evaluation of Laplace layer potentials.
//!
//! Both potentials are real parts of Cauchy-type holomorphic functions `v`.
//! Step 1 computes the one-sided boundary limits of `v` at the nodes; Step 2
//! hands them to the barycentric evaluator in [`crate::cauchy`]. The gradient
//! is `∇u = (Re v', −Im v')`.
//!
//! Conventions: `D̃τ = Re (1/2πi)∮ τ(y)/(x − y) dy` (so `τ ≡ 1` gives −1
//! inside) and `S̃τ = (1/2π)∮ log(1/|x − y|) τ ds`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::cauchy::{self, ExteriorAnchor, Holomorphic, Mode, Side, TargetBatch};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::spectral;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Weights `R_d`, `d = 0..N−1`, that integrate `g(s − t) = log(1 − e^{i(s−t)})`
/// against the periodic trapezoid data exactly for trigonometric
/// polynomials of degree below N/2: `R_d = Σ_{0<m<N/2} (−1/m) e^{−2πimd/N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductQuadWeights {
    r: Vec<C64>,
}

impl ProductQuadWeights {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::OddLength(n));
        }
        let mut g = vec![C64::new(0.0, 0.0); n];
        for m in 1..n / 2 {
            g[n - m] = C64::new(-1.0 / m as f64, 0.0);
        }
        // half-weight Nyquist term
        g[n / 2] = C64::new(-1.0 / n as f64, 0.0);
        spectral::ifft(&mut g);
        Ok(ProductQuadWeights { r: g })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn weights(&self) -> &[C64] {
        &self.r
    }

    /// `R_d` with cyclic index.
    pub fn at(&self, d: i64) -> C64 {
        let n = self.r.len() as i64;
        self.r[d.rem_euclid(n) as usize]
    }
}

pub fn product_quad_weights(n: usize) -> Result<ProductQuadWeights> {
    ProductQuadWeights::new(n)
}

/// Shifts each entry by a multiple of 2πi so that consecutive imaginary
/// parts differ by at most π.
pub fn branch_unwrap(values: &[C64]) -> Vec<C64> {
    let mut v = values.to_vec();
    unwrap_strided(&mut v, 0, 1, values.len());
    v
}

fn unwrap_strided(v: &mut [C64], start: usize, stride: usize, count: usize) {
    for t in 1..count {
        let prev = v[start + (t - 1) * stride];
        let cur = &mut v[start + t * stride];
        let k = ((cur.im - prev.im) / (2.0 * PI)).round();
        cur.im -= 2.0 * PI * k;
    }
}

/// One-sided limits of the Cauchy integral `(1/2πi)∮ τ/(x − y) dy` at the
/// nodes, for real or complex `τ`.
pub fn dlp_boundary_data(curve: &Curve, tau: &[C64], side: Side) -> Result<Vec<C64>> {
    curve.check_len(tau.len())?;
    let n = curve.n();
    let dtau = spectral::spectral_derivative(tau)?;
    let (y, dy) = (curve.nodes(), curve.dy());
    let scale = 1.0 / (2.0 * PI * I);
    let v = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    s += (tau[j] - tau[k]) * dy[j] / (y[j] - y[k]);
                }
            }
            let interior = -tau[k] - scale * s - dtau[k] / (I * n as f64);
            match side {
                Side::Interior => interior,
                Side::Exterior => interior + tau[k],
            }
        })
        .collect();
    Ok(v)
}

/// Step-1 output for the single layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SlpBoundaryData {
    pub v_limits: Vec<C64>,
    /// `T = Σ_j w_j τ_j`.
    pub total_charge: f64,
    pub side: Side,
}

/// Dense Step-1 machinery for the single layer on one curve: the unwrapped
/// smooth kernel `log((e^{is_j} − e^{is_k})/(y_j − y_k))` and the product
/// weights for the remaining `log(1/(e^{is_j} − e^{is_k}))`.
#[derive(Debug, Clone)]
pub struct SlpOperator {
    n: usize,
    kernel: Vec<C64>,
    weights: Vec<f64>,
    params: Vec<f64>,
    r: ProductQuadWeights,
}

impl SlpOperator {
    pub fn new(curve: &Curve) -> Self {
        let n = curve.n();
        let (y, zp, s) = (curve.nodes(), curve.d_nodes(), curve.params());
        let e: Vec<C64> = s.iter().map(|&t| C64::from_polar(1.0, t)).collect();
        let mut kernel: Vec<C64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (k, j) = (idx / n, idx % n);
                if j == k {
                    (I * e[k] / zp[k]).ln()
                } else {
                    ((e[j] - e[k]) / (y[j] - y[k])).ln()
                }
            })
            .collect();
        // fix the column j = 0 along k, then each row along j from there
        unwrap_strided(&mut kernel, 0, n, n);
        kernel.par_chunks_mut(n).for_each(|row| unwrap_strided(row, 0, 1, n));
        SlpOperator { n, kernel, weights: curve.weights().to_vec(), params: s.to_vec(), r: ProductQuadWeights::new(n).expect("even N") }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unwrapped smooth kernel, row-major (row = target node).
    pub fn kernel(&self) -> &[C64] {
        &self.kernel
    }

    pub fn boundary_data(&self, tau: &[f64], side: Side) -> Result<SlpBoundaryData> {
        if tau.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: tau.len() });
        }
        let n = self.n;
        let f: Vec<f64> = tau.iter().zip(&self.weights).map(|(t, w)| t * w).collect();
        let total: f64 = f.iter().sum();
        let v = (0..n)
            .into_par_iter()
            .map(|k| {
                let row = &self.kernel[k * n..(k + 1) * n];
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    let d = match side {
                        Side::Interior => j as i64 - k as i64,
                        Side::Exterior => k as i64 - j as i64,
                    };
                    s += (row[j] - self.r.at(d)) * f[j];
                }
                let mut v = s / (2.0 * PI);
                if side == Side::Exterior {
                    v += total / (2.0 * PI * I) * self.params[k];
                }
                v
            })
            .collect();
        Ok(SlpBoundaryData { v_limits: v, total_charge: total, side })
    }

    /// Matrix `A` with `v⁻ = Aτ` (row-major).
    pub fn interior_matrix(&self) -> Vec<C64> {
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        a.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            for j in 0..n {
                row[j] = (self.kernel[k * n + j] - self.r.at(j as i64 - k as i64)) * (self.weights[j] / (2.0 * PI));
            }
        });
        a
    }
}

pub fn slp_boundary_data(curve: &Curve, tau: &[f64], side: Side) -> Result<SlpBoundaryData> {
    curve.check_len(tau.len())?;
    SlpOperator::new(curve).boundary_data(tau, side)
}

/// Harmonic potential values and gradients at targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PotentialResult {
    pub u: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
}

impl PotentialResult {
    pub fn from_holomorphic(h: &Holomorphic) -> Self {
        PotentialResult {
            u: h.values.iter().map(|v| v.re).collect(),
            grad: h.derivatives.iter().map(|d| [d.re, -d.im]).collect(),
        }
    }
}

/// Per-curve settings for close evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloseOptions {
    /// Exterior anchor; the node centroid when `None`.
    pub anchor: Option<C64>,
    /// Minimum anchor-to-curve distance as a fraction of the diameter.
    pub anchor_ratio: f64,
    /// Total charges below `charge_floor·Σw` are treated as zero.
    pub charge_floor: f64,
}

impl Default for CloseOptions {
    fn default() -> Self {
        CloseOptions { anchor: None, anchor_ratio: ExteriorAnchor::DEFAULT_RATIO, charge_floor: 1e-13 }
    }
}

/// Close evaluator bound to one curve. Caches the exterior anchor and the
/// single-layer Step-1 kernel (built on first use).
#[derive(Debug)]
pub struct LaplaceEvaluator {
    curve: Curve,
    opts: CloseOptions,
    anchor: std::result::Result<ExteriorAnchor, Error>,
    slp: OnceLock<SlpOperator>,
}

impl LaplaceEvaluator {
    pub fn new(curve: Curve, opts: CloseOptions) -> Self {
        let a = opts.anchor.unwrap_or_else(|| curve.centroid());
        let anchor = ExteriorAnchor::new(&curve, a, opts.anchor_ratio);
        LaplaceEvaluator { curve, opts, anchor, slp: OnceLock::new() }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn options(&self) -> &CloseOptions {
        &self.opts
    }

    pub fn anchor(&self) -> Result<&ExteriorAnchor> {
        self.anchor.as_ref().map_err(|e| e.clone())
    }

    pub fn slp_operator(&self) -> &SlpOperator {
        self.slp.get_or_init(|| SlpOperator::new(&self.curve))
    }

    fn side_anchor(&self, targets: &TargetBatch) -> Result<Option<&ExteriorAnchor>> {
        match targets.side {
            Side::Interior => Ok(None),
            Side::Exterior => self.anchor().map(Some),
        }
    }

    /// Cauchy integrals `(1/2πi)∮ τ/(x − y) dy` for several (complex)
    /// densities at once.
    pub fn dlp_holomorphic(&self, taus: &[&[C64]], targets: &TargetBatch, mode: Mode) -> Result<Vec<Holomorphic>> {
        let anchor = self.side_anchor(targets)?;
        let limits = taus.iter().map(|t| dlp_boundary_data(&self.curve, t, targets.side)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[C64]> = limits.iter().map(|v| v.as_slice()).collect();
        cauchy::evaluate(&self.curve, &refs, targets, anchor, mode)
    }

    /// Holomorphic functions whose real parts are the single-layer
    /// potentials of the given real densities.
    pub fn slp_holomorphic(&self, taus: &[&[f64]], targets: &TargetBatch, mode: Mode) -> Result<Vec<Holomorphic>> {
        let anchor = self.side_anchor(targets)?;
        let op = self.slp_operator();
        let data = taus.iter().map(|t| op.boundary_data(t, targets.side)).collect::<Result<Vec<_>>>()?;
        let Some(anchor) = anchor else {
            let refs: Vec<&[C64]> = data.iter().map(|d| d.v_limits.as_slice()).collect();
            return cauchy::evaluate(&self.curve, &refs, targets, None, mode);
        };
        let a = anchor.point();
        let (y, dy) = (self.curve.nodes(), self.curve.dy());
        let floor = self.opts.charge_floor * self.curve.perimeter();
        // log(1/(a − y_k)), continuous in k from the principal value at k = 0
        let log_a: Vec<C64> = branch_unwrap(&y.iter().map(|yk| (1.0 / (a - yk)).ln()).collect::<Vec<_>>());
        let mut charges = Vec::with_capacity(data.len());
        let mut shifted = Vec::with_capacity(data.len());
        for d in &data {
            let t = if d.total_charge.abs() > floor { d.total_charge } else { 0.0 };
            let mut w: Vec<C64> = d.v_limits.iter().zip(&log_a).map(|(v, l)| v - t / (2.0 * PI) * l).collect();
            // remove the constant at infinity so that w vanishes there
            let c: C64 = w.iter().zip(y).zip(dy).map(|((w, y), d)| w * d / (y - a)).sum::<C64>() / (2.0 * PI * I);
            w.iter_mut().for_each(|z| *z -= c);
            charges.push(t);
            shifted.push(w);
        }
        let refs: Vec<&[C64]> = shifted.iter().map(|v| v.as_slice()).collect();
        let mut out = cauchy::evaluate(&self.curve, &refs, targets, Some(anchor), mode)?;
        for (h, &t) in out.iter_mut().zip(&charges) {
            if t == 0.0 {
                continue;
            }
            let q = t / (2.0 * PI);
            for (v, x) in h.values.iter_mut().zip(&targets.points) {
                *v += q * (1.0 / (a - x)).ln();
            }
            for (d, x) in h.derivatives.iter_mut().zip(&targets.points) {
                *d += q / (a - x);
            }
        }
        Ok(out)
    }

    pub fn dlp(&self, tau: &[f64], targets: &TargetBatch) -> Result<PotentialResult> {
        let t: Vec<C64> = tau.iter().map(|&x| C64::new(x, 0.0)).collect();
        let h = self.dlp_holomorphic(&[&t], targets, Mode::FULL)?;
        Ok(PotentialResult::from_holomorphic(&h[0]))
    }

    pub fn slp(&self, tau: &[f64], targets: &TargetBatch) -> Result<PotentialResult> {
        let h = self.slp_holomorphic(&[tau], targets, Mode::FULL)?;
        Ok(PotentialResult::from_holomorphic(&h[0]))
    }
}

/// Double-layer potential and gradient with default options.
pub fn laplace_dlp_eval(curve: &Curve, tau: &[f64], targets: &TargetBatch) -> Result<PotentialResult> {
    LaplaceEvaluator::new(curve.clone(), CloseOptions::default()).dlp(tau, targets)
}

/// Cauchy integral of a complex density and its derivative (no real part
/// taken).
pub fn laplace_dlp_eval_complex(curve: &Curve, tau: &[C64], targets: &TargetBatch) -> Result<Holomorphic> {
    let ev = LaplaceEvaluator::new(curve.clone(), CloseOptions::default());
    Ok(ev.dlp_holomorphic(&[tau], targets, Mode::FULL)?.pop().expect("one density"))
}

/// Single-layer potential and gradient with default options.
pub fn laplace_slp_eval(curve: &Curve, tau: &[f64], targets: &TargetBatch) -> Result<PotentialResult> {
    LaplaceEvaluator::new(curve.clone(), CloseOptions::default()).slp(tau, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use layerpot_oracle::{periodic_with_singularity, Tolerance};

    fn star(n: usize) -> Curve {
        CurveSpec::star(0.3, 5, n).build().unwrap()
    }

    fn circle(n: usize) -> Curve {
        CurveSpec::ellipse(1.0, 1.0, n).build().unwrap()
    }

    /// Direct summation of the truncated series.
    fn direct_weights(n: usize) -> Vec<C64> {
        (0..n)
            .map(|d| {
                let nyquist = if d % 2 == 0 { -1.0 } else { 1.0 } / n as f64;
                (1..n / 2)
                    .map(|m| -C64::from_polar(1.0, -2.0 * PI * (m * d) as f64 / n as f64) / m as f64)
                    .sum::<C64>()
                    + nyquist
            })
            .collect()
    }

    #[test]
    fn weights_match_direct_summation() {
        for n in [2, 4, 8, 64, 256] {
            let r = ProductQuadWeights::new(n).unwrap();
            for (a, b) in r.weights().iter().zip(direct_weights(n)) {
                assert!((a - b).norm() <= 1e-13, "N={n}");
            }
        }
        // N = 4: R_d = −e^{−iπd/2} − (−1)^d/4
        let r = ProductQuadWeights::new(4).unwrap();
        assert!((r.at(1) - C64::new(0.25, 1.0)).norm() < 1e-15);
        assert!((r.at(4) + 1.25).norm() < 1e-15);
        let r = ProductQuadWeights::new(2).unwrap();
        assert!((r.at(0) + 0.5).norm() < 1e-15 && (r.at(1) - 0.5).norm() < 1e-15);
        assert!(ProductQuadWeights::new(7).is_err());
    }

    #[test]
    fn unwrap_examples() {
        let z = |v: &[f64]| v.iter().map(|&t| C64::new(0.0, t)).collect::<Vec<_>>();
        assert_eq!(branch_unwrap(&z(&[0.0, 0.1, 0.2])), z(&[0.0, 0.1, 0.2]));
        let u = branch_unwrap(&z(&[0.0, 2.0 * PI - 0.1]));
        assert!((u[1].im + 0.1).abs() < 1e-15);
        assert_eq!(branch_unwrap(&z(&[0.0, 3.0, 6.0, 9.0])), z(&[0.0, 3.0, 6.0, 9.0]));
    }

    #[test]
    fn dlp_constant_density_limits() {
        let c = star(64);
        let one = vec![C64::new(1.0, 0.0); 64];
        for v in dlp_boundary_data(&c, &one, Side::Interior).unwrap() {
            assert!((v + 1.0).norm() < 1e-13);
        }
        for v in dlp_boundary_data(&c, &one, Side::Exterior).unwrap() {
            assert!(v.norm() < 1e-13);
        }
    }

    #[test]
    fn dlp_limit_matches_quadrature() {
        let c = circle(64);
        let tau: Vec<C64> = c.params().iter().map(|s| C64::new(s.cos(), 0.0)).collect();
        let v = dlp_boundary_data(&c, &tau, Side::Interior).unwrap();
        for k in [0, 7, 31, 50] {
            let t = c.params()[k];
            let x = C64::from_polar(1.0, t);
            // Re of −τ(x) − (1/2πi)∮ (τ(y) − τ(x))/(y − x) dy
            let f = |s: f64| {
                let y = C64::from_polar(1.0, s);
                ((s.cos() - t.cos()) / (y - x) * (I * y) / (2.0 * PI * I)).re
            };
            let o = -t.cos() - periodic_with_singularity(f, t, Tolerance::default()).value;
            assert!((v[k].re - o).abs() <= 1e-12, "k={k}: {} vs {o}", v[k].re);
        }
    }

    fn slp_oracle(spec: &CurveSpec, tau: impl Fn(f64) -> f64, t: f64) -> f64 {
        let (x, _, _) = spec.eval(t);
        let f = |s: f64| {
            let (y, yp, _) = spec.eval(s);
            -(y - x).norm().ln() * tau(s) * yp.norm() / (2.0 * PI)
        };
        periodic_with_singularity(f, t, Tolerance::default()).value
    }

    #[test]
    fn slp_uniform_circle() {
        let c = circle(32);
        let one = vec![1.0; 32];
        let i = slp_boundary_data(&c, &one, Side::Interior).unwrap();
        let e = slp_boundary_data(&c, &one, Side::Exterior).unwrap();
        let o = slp_oracle(&CurveSpec::ellipse(1.0, 1.0, 32), |_| 1.0, 0.3);
        assert!(o.abs() < 1e-14);
        for k in 0..32 {
            assert!(i.v_limits[k].re.abs() < 1e-13);
            assert!(e.v_limits[k].re.abs() < 1e-13);
        }
        assert!((e.total_charge - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn slp_limit_matches_quadrature_on_star() {
        for (n, tol) in [(256, 1e-10), (384, 1e-12), (512, 1e-14)] {
            let spec = CurveSpec::star(0.3, 5, n);
            let c = spec.build().unwrap();
            let tau: Vec<f64> = c.params().iter().map(|s| 1.0 + (3.0 * s).cos()).collect();
            let d = slp_boundary_data(&c, &tau, Side::Interior).unwrap();
            let e = slp_boundary_data(&c, &tau, Side::Exterior).unwrap();
            for k in (0..n).step_by(n / 16) {
                let o = slp_oracle(&spec, |s| 1.0 + (3.0 * s).cos(), c.params()[k]);
                assert!((d.v_limits[k].re - o).abs() <= tol, "N={n} k={k}: {:e}", (d.v_limits[k].re - o).abs());
                assert!((e.v_limits[k].re - o).abs() <= tol);
            }
        }
    }

    #[test]
    fn dlp_constant_density_everywhere() {
        let c = star(128);
        let one = vec![1.0; 128];
        let mut inside = vec![C64::new(0.1, 0.0), C64::new(-0.3, 0.4)];
        let mut outside = vec![C64::new(2.0, 0.0), C64::new(-1.0, 1.3)];
        for j in [0, 17, 40] {
            let (y, n) = (c.nodes()[j], c.normals()[j]);
            for d in [1e-15, 1e-10, 1e-5, 1e-2] {
                inside.push(y - d * n);
                outside.push(y + d * n);
            }
        }
        let ri = laplace_dlp_eval(&c, &one, &TargetBatch::interior(inside)).unwrap();
        for (u, g) in ri.u.iter().zip(&ri.grad) {
            assert!((u + 1.0).abs() <= 1e-12);
            assert!(g[0].hypot(g[1]) <= 1e-12);
        }
        let re = laplace_dlp_eval(&c, &one, &TargetBatch::exterior(outside)).unwrap();
        for (u, g) in re.u.iter().zip(&re.grad) {
            assert!(u.abs() <= 1e-12);
            assert!(g[0].hypot(g[1]) <= 1e-12);
        }
    }

    #[test]
    fn slp_uniform_circle_potential() {
        let c = circle(64);
        let one = vec![1.0; 64];
        let pts = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.3), C64::new(0.0, 0.999_999), c.nodes()[3]];
        let r = laplace_slp_eval(&c, &one, &TargetBatch::interior(pts)).unwrap();
        for (u, g) in r.u.iter().zip(&r.grad) {
            assert!(u.abs() <= 1e-12);
            assert!(g[0].hypot(g[1]) <= 1e-12);
        }
        let r = laplace_slp_eval(&c, &one, &TargetBatch::exterior(vec![C64::new(2.0, 0.0)])).unwrap();
        assert!((r.u[0] + 2f64.ln()).abs() <= 1e-12);
        assert!((r.grad[0][0] + 0.5).abs() <= 1e-12);
    }
}
