//! Invariants of the close-evaluation schemes over randomized curves,
//! densities and targets.

use std::f64::consts::PI;

use layerpot::cauchy::{evaluate, Mode};
use layerpot::gmres::{gmres, GmresConfig};
use layerpot::spectral::{resample_to, spectral_derivative};
use layerpot::{CloseOptions, Curve, CurveSpec, ExteriorAnchor, LaplaceEvaluator, Side, StokesEvaluator, TargetBatch, C64};
use layerpot_oracle::{integrate, Tolerance};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn star_spec() -> impl Strategy<Value = CurveSpec> {
    (0.05..0.25f64, 3u32..6, -PI..PI, 0.7..1.3f64).prop_map(|(amplitude, frequency, angle, scale)| CurveSpec::Star {
        amplitude,
        frequency,
        n: 256,
        center: [0.0, 0.0],
        angle,
        scale,
    })
}

/// Point at parameter `s` of the curve, moved `h` along the outward normal.
fn off_curve(spec: &CurveSpec, s: f64, h: f64) -> (C64, C64) {
    let (y, yp, _) = spec.eval(s);
    let n = -C64::i() * yp / yp.norm();
    (y + h * n, y)
}

fn smooth_density(curve: &Curve, k: f64, phase: f64) -> Vec<f64> {
    curve.params().iter().map(|&s| (k * s + phase).cos() + 0.3 * (2.0 * s).sin()).collect()
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn ellipse_perimeter(a in 0.5..1.5f64, b in 0.5..1.5f64, angle in -PI..PI) {
        let spec = CurveSpec::Ellipse { a, b, n: 256, center: [0.3, -0.2], angle };
        let c = spec.build().unwrap();
        let want = integrate(|s| spec.eval(s).1.norm(), 0.0, 2.0 * PI, Tolerance::default()).value;
        prop_assert!((c.perimeter() - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn spectral_derivative_of_trig_polynomial(
        log_n in 3usize..8,
        coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..8),
    ) {
        let n = 1 << log_n;
        let kmax = (n / 2 - 1).min(coeffs.len());
        let terms: Vec<(f64, C64)> = (0..kmax).map(|k| ((k as f64 + 1.0) * if k % 2 == 0 { 1.0 } else { -1.0 }, C64::new(coeffs[k].0, coeffs[k].1))).collect();
        let s = |j: usize| 2.0 * PI * j as f64 / n as f64;
        let f: Vec<C64> = (0..n).map(|j| terms.iter().map(|&(k, c)| c * C64::from_polar(1.0, k * s(j))).sum()).collect();
        let df = spectral_derivative(&f).unwrap();
        let scale: f64 = terms.iter().map(|(k, c)| k.abs() * c.norm()).sum();
        for (j, d) in df.iter().enumerate() {
            let want: C64 = terms.iter().map(|&(k, c)| C64::i() * k * c * C64::from_polar(1.0, k * s(j))).sum();
            prop_assert!((d - want).norm() <= 1e-13 * scale.max(1.0));
        }
    }

    #[test]
    fn resample_round_trip(log_n in 3usize..8, factor in 1usize..5, seed in 0.0..1.0f64) {
        let n = 1 << log_n;
        let f: Vec<C64> = (0..n)
            .map(|j| {
                let s = 2.0 * PI * j as f64 / n as f64;
                C64::new((s + seed).cos(), ((n / 2 - 1) as f64 * s).sin() * seed)
            })
            .collect();
        let up = resample_to(&f, factor * n).unwrap();
        let back = resample_to(&up, n).unwrap();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-13);
        }
        for (j, a) in f.iter().enumerate() {
            prop_assert!((up[j * factor] - a).norm() <= 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn interior_barycentric_reproduces_constants(
        spec in star_spec(),
        c in (-2.0..2.0f64, -2.0..2.0f64),
        s in 0.0..2.0 * PI,
        e in 0.0..16.0f64,
    ) {
        let curve = spec.build().unwrap();
        let c = C64::new(c.0, c.1);
        let v = vec![c; curve.n()];
        let (x, _) = off_curve(&spec, s, -10f64.powf(-e) * 0.1);
        let h = evaluate(&curve, &[&v], &TargetBatch::interior(vec![x, C64::new(0.05, -0.02)]), None, Mode::FULL).unwrap().remove(0);
        for (val, der) in h.values.iter().zip(&h.derivatives) {
            prop_assert!((val - c).norm() <= 1e-14 * c.norm().max(1.0));
            prop_assert!(der.norm() <= 1e-12 * c.norm().max(1.0));
        }
    }

    #[test]
    fn exterior_barycentric_reproduces_anchor_pole(
        spec in star_spec(),
        s in 0.0..2.0 * PI,
        e in 0.0..16.0f64,
    ) {
        let curve = spec.build().unwrap();
        let anchor = ExteriorAnchor::centroid(&curve).unwrap();
        let a = anchor.point();
        let v: Vec<C64> = curve.nodes().iter().map(|y| 1.0 / (y - a)).collect();
        let (x, _) = off_curve(&spec, s, 10f64.powf(-e) * 0.1);
        let h = evaluate(&curve, &[&v], &TargetBatch::exterior(vec![x]), Some(&anchor), Mode::VALUE).unwrap().remove(0);
        let want = 1.0 / (x - a);
        prop_assert!((h.values[0] - want).norm() <= 1e-14 * want.norm().max(1.0));
    }

    #[test]
    fn dlp_of_unit_density(spec in star_spec(), s in 0.0..2.0 * PI, e in 0.0..15.0f64) {
        let curve = spec.build().unwrap();
        let ev = LaplaceEvaluator::new(curve.clone(), CloseOptions::default());
        let tau = vec![1.0; curve.n()];
        let h = 10f64.powf(-e) * 0.1;
        let (xi, _) = off_curve(&spec, s, -h);
        let (xe, _) = off_curve(&spec, s, h);
        let ui = ev.dlp(&tau, &TargetBatch::interior(vec![xi])).unwrap();
        let ue = ev.dlp(&tau, &TargetBatch::exterior(vec![xe])).unwrap();
        prop_assert!((ui.u[0] + 1.0).abs() <= 1e-12, "interior {}", ui.u[0]);
        prop_assert!(ue.u[0].abs() <= 1e-12, "exterior {}", ue.u[0]);
    }

    #[test]
    fn jump_relations(spec in star_spec(), s in 0.0..2.0 * PI, e in 11.0..14.0f64, k in 1.0..4.0f64, phase in -PI..PI) {
        let curve = spec.build().unwrap();
        let ev = LaplaceEvaluator::new(curve.clone(), CloseOptions::default());
        let tau = smooth_density(&curve, k.round(), phase);
        let tau_at = (k.round() * s + phase).cos() + 0.3 * (2.0 * s).sin();
        let h = 10f64.powf(-e);
        let (xi, _) = off_curve(&spec, s, -h);
        let (xe, _) = off_curve(&spec, s, h);
        let (int, ext) = (TargetBatch::interior(vec![xi]), TargetBatch::exterior(vec![xe]));
        let (si, se) = (ev.slp(&tau, &int).unwrap().u[0], ev.slp(&tau, &ext).unwrap().u[0]);
        prop_assert!((si - se).abs() <= 1e-10, "single layer jumps by {}", se - si);
        let (di, de) = (ev.dlp(&tau, &int).unwrap().u[0], ev.dlp(&tau, &ext).unwrap().u[0]);
        prop_assert!((de - di - tau_at).abs() <= 1e-10, "double layer jump {} vs {}", de - di, tau_at);
    }
}

/// Interior or exterior point at least 0.1 from the curve.
fn probe_point(spec: &CurveSpec, s: f64, d: f64, side: Side) -> C64 {
    let sign = if side == Side::Interior { -1.0 } else { 1.0 };
    off_curve(spec, s, sign * d).0
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn potentials_are_harmonic(spec in star_spec(), s in 0.0..2.0 * PI, d in 0.1..0.3f64, interior in any::<bool>(), k in 1.0..4.0f64) {
        let side = if interior { Side::Interior } else { Side::Exterior };
        let curve = spec.build().unwrap();
        let ev = LaplaceEvaluator::new(curve.clone(), CloseOptions::default());
        let tau = smooth_density(&curve, k.round(), 0.4);
        let x = probe_point(&spec, s, d, side);
        let h = 1e-4;
        let pts = vec![x + h, x - h, x + C64::new(0.0, h), x - C64::new(0.0, h)];
        let batch = TargetBatch::new(pts, side);
        for g in [ev.slp(&tau, &batch).unwrap().grad, ev.dlp(&tau, &batch).unwrap().grad] {
            let lap = (g[0][0] - g[1][0] + g[2][1] - g[3][1]) / (2.0 * h);
            prop_assert!(lap.abs() <= 1e-6, "laplacian {lap}");
        }
    }

    #[test]
    fn stokes_velocity_is_divergence_free(spec in star_spec(), s in 0.0..2.0 * PI, d in 0.1..0.3f64, interior in any::<bool>(), k in 1.0..3.0f64) {
        let side = if interior { Side::Interior } else { Side::Exterior };
        let curve = spec.build().unwrap();
        let ev = StokesEvaluator::with_defaults(curve.clone()).unwrap();
        let sigma: Vec<[f64; 2]> = curve.params().iter().map(|&t| [(k.round() * t).cos(), 0.5 * (t + 0.3).sin()]).collect();
        let x = probe_point(&spec, s, d, side);
        let h = 1e-4;
        let batch = TargetBatch::new(vec![x + h, x - h, x + C64::new(0.0, h), x - C64::new(0.0, h)], side);
        for u in [ev.slp(&sigma, &batch).unwrap(), ev.dlp(&sigma, &batch).unwrap()] {
            let div = (u[0][0] - u[1][0] + u[2][1] - u[3][1]) / (2.0 * h);
            prop_assert!(div.abs() <= 1e-7, "divergence {div}");
        }
    }

    #[test]
    fn gmres_solves_diagonally_dominant_systems(n in 4usize..40, seed in 0.0..1.0f64) {
        let a = |i: usize, j: usize| if i == j { 2.0 + (i as f64 * seed).sin() } else { 0.5 * ((i * 7 + j * 3) as f64 + seed).sin() / n as f64 };
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + seed).cos()).collect();
        let apply = |v: &[f64]| -> layerpot::Result<Vec<f64>> { Ok((0..n).map(|i| (0..n).map(|j| a(i, j) * v[j]).sum()).collect()) };
        let b = apply(&x).unwrap();
        let r = gmres(apply, &b, &GmresConfig::default()).unwrap();
        prop_assert!(r.converged);
        for (p, q) in r.x.iter().zip(&x) {
            prop_assert!((p - q).abs() <= 1e-10);
        }
    }
}
