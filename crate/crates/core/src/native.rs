//! Plain N-point trapezoid ("native") evaluation of the layer potentials.
//! Accurate only far from the curve; used for comparisons and far-field
//! checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::curve::Curve;

fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// `(S̃τ(x), ∇S̃τ(x))` with `S̃τ = (1/2π)∮ log(1/|x − y|) τ ds`.
pub fn laplace_slp(curve: &Curve, tau: &[f64], x: C64) -> (f64, [f64; 2]) {
    let (mut u, mut g) = (0.0, C64::new(0.0, 0.0));
    for ((y, w), t) in curve.nodes().iter().zip(curve.weights()).zip(tau) {
        let r = x - y;
        let q = w * t / (2.0 * PI);
        u -= q * r.norm().ln();
        g -= q * r / r.norm_sqr();
    }
    (u, [g.re, g.im])
}

/// `(D̃τ(x), ∇D̃τ(x))` with `D̃τ = (1/2π)∮ (r·n)/ρ² τ ds`, `r = x − y`.
pub fn laplace_dlp(curve: &Curve, tau: &[f64], x: C64) -> (f64, [f64; 2]) {
    let (mut u, mut g) = (0.0, C64::new(0.0, 0.0));
    for (((y, n), w), t) in curve.nodes().iter().zip(curve.normals()).zip(curve.weights()).zip(tau) {
        let r = x - y;
        let rho2 = r.norm_sqr();
        let rn = dot(r, *n);
        let q = w * t / (2.0 * PI);
        u += q * rn / rho2;
        g += q * (n / rho2 - 2.0 * rn * r / (rho2 * rho2));
    }
    (u, [g.re, g.im])
}

/// Stokes single layer `(1/4π)∮ [log(1/ρ)σ + (r·σ)r/ρ²] ds`.
pub fn stokes_slp(curve: &Curve, sigma: &[[f64; 2]], x: C64) -> [f64; 2] {
    let mut u = C64::new(0.0, 0.0);
    for ((y, w), s) in curve.nodes().iter().zip(curve.weights()).zip(sigma) {
        let r = x - y;
        let rho2 = r.norm_sqr();
        let s = C64::new(s[0], s[1]);
        u += (-0.5 * rho2.ln() * s + dot(r, s) * r / rho2) * w;
    }
    let u = u / (4.0 * PI);
    [u.re, u.im]
}

/// Stokes double layer `(1/π)∮ (r·n)(r·σ) r/ρ⁴ ds`.
pub fn stokes_dlp(curve: &Curve, sigma: &[[f64; 2]], x: C64) -> [f64; 2] {
    let mut u = C64::new(0.0, 0.0);
    for (((y, n), w), s) in curve.nodes().iter().zip(curve.normals()).zip(curve.weights()).zip(sigma) {
        let r = x - y;
        let rho2 = r.norm_sqr();
        u += dot(r, *n) * dot(r, C64::new(s[0], s[1])) * r / (rho2 * rho2) * w;
    }
    let u = u / PI;
    [u.re, u.im]
}
