//! Close evaluation of Stokes layer potentials through Laplace ones.
//!
//! Single layer, with `S̃` the Laplace single layer:
//! `𝐒σ = ½[S̃σ + ∇S̃[y·σ] − x₁∇S̃[σ₁] − x₂∇S̃[σ₂]]`.
//! Double layer, with `D̃` the Laplace double layer and `v[τ]` the Cauchy
//! integral `(1/2πi)∮ τ/(x − y) dy`:
//! `𝐃σ = (Re v[τ₁], Re v[τ₂]) + ∇D̃[y·σ] − x₁∇D̃[σ₁] − x₂∇D̃[σ₂]`,
//! where `τ_m = (σ₁ + iσ₂) n_m / n`. The Cauchy pair is evaluated on a finer
//! grid since its integrand is more oscillatory.

use num_complex::Complex64 as C64;

use crate::cauchy::{Mode, TargetBatch};
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::laplace::{CloseOptions, LaplaceEvaluator};
use crate::spectral;

/// Default upsampling factor for the Cauchy part of the double layer.
pub const DEFAULT_BETA: f64 = 2.2;

/// Velocity at each target.
pub type StokesVelocity = Vec<[f64; 2]>;

/// `(τ₁, τ₂)` with `τ_m = (σ₁ + iσ₂)·n_m/n`, `n` the unit normal as a
/// complex number.
pub fn complex_density_split(sigma: &[[f64; 2]], normals: &[C64]) -> (Vec<C64>, Vec<C64>) {
    sigma
        .iter()
        .zip(normals)
        .map(|(s, n)| {
            let sc = C64::new(s[0], s[1]);
            (sc * n.re / n, sc * n.im / n)
        })
        .unzip()
}

/// Stokes close evaluator bound to one curve.
#[derive(Debug)]
pub struct StokesEvaluator {
    coarse: LaplaceEvaluator,
    fine: LaplaceEvaluator,
    beta: f64,
}

impl StokesEvaluator {
    pub fn new(curve: Curve, opts: CloseOptions, beta: f64) -> Result<Self> {
        if !(beta >= 1.0) {
            return Err(Error::BadFactor(beta));
        }
        let m = if beta == 1.0 { curve.n() } else { spectral::resampled_len(curve.n(), beta) };
        let fine_curve = if m == curve.n() { curve.clone() } else { curve.resampled(m)? };
        let anchor = Some(opts.anchor.unwrap_or_else(|| curve.centroid()));
        let fine = LaplaceEvaluator::new(fine_curve, CloseOptions { anchor, ..opts });
        let coarse = LaplaceEvaluator::new(curve, CloseOptions { anchor, ..opts });
        Ok(StokesEvaluator { coarse, fine, beta })
    }

    pub fn with_defaults(curve: Curve) -> Result<Self> {
        Self::new(curve, CloseOptions::default(), DEFAULT_BETA)
    }

    pub fn curve(&self) -> &Curve {
        self.coarse.curve()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn laplace(&self) -> &LaplaceEvaluator {
        &self.coarse
    }

    fn split(&self, sigma: &[[f64; 2]]) -> Result<[Vec<f64>; 3]> {
        let c = self.coarse.curve();
        c.check_len(sigma.len())?;
        let s1 = sigma.iter().map(|s| s[0]).collect();
        let s2 = sigma.iter().map(|s| s[1]).collect();
        let ys = c.nodes().iter().zip(sigma).map(|(y, s)| y.re * s[0] + y.im * s[1]).collect();
        Ok([s1, s2, ys])
    }

    pub fn slp(&self, sigma: &[[f64; 2]], targets: &TargetBatch) -> Result<StokesVelocity> {
        let [s1, s2, ys] = self.split(sigma)?;
        let h = self.coarse.slp_holomorphic(&[&s1, &s2, &ys], targets, Mode::FULL)?;
        Ok(targets
            .points
            .iter()
            .enumerate()
            .map(|(t, x)| {
                // ∇u = conj(v') as a complex vector
                let g = |k: usize| h[k].derivatives[t].conj();
                let r = g(2) - x.re * g(0) - x.im * g(1);
                [0.5 * (h[0].values[t].re + r.re), 0.5 * (h[1].values[t].re + r.im)]
            })
            .collect())
    }

    pub fn dlp(&self, sigma: &[[f64; 2]], targets: &TargetBatch) -> Result<StokesVelocity> {
        let [s1, s2, ys] = self.split(sigma)?;
        let to_c = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        let (c1, c2, cy) = (to_c(&s1), to_c(&s2), to_c(&ys));
        let h = self.coarse.dlp_holomorphic(&[&c1, &c2, &cy], targets, Mode::FULL)?;
        let fine = self.fine.curve();
        let sig_c: Vec<C64> = sigma.iter().map(|s| C64::new(s[0], s[1])).collect();
        let sig_f = if fine.n() == sig_c.len() { sig_c } else { spectral::resample_to(&sig_c, fine.n())? };
        let sig_f: Vec<[f64; 2]> = sig_f.iter().map(|z| [z.re, z.im]).collect();
        let (t1, t2) = complex_density_split(&sig_f, fine.normals());
        let hf = self.fine.dlp_holomorphic(&[&t1, &t2], targets, Mode::VALUE)?;
        Ok(targets
            .points
            .iter()
            .enumerate()
            .map(|(t, x)| {
                let g = |k: usize| h[k].derivatives[t].conj();
                let r = g(2) - x.re * g(0) - x.im * g(1);
                [hf[0].values[t].re + r.re, hf[1].values[t].re + r.im]
            })
            .collect())
    }

    /// `(𝐃 + 𝐒)σ`.
    pub fn combined(&self, sigma: &[[f64; 2]], targets: &TargetBatch) -> Result<StokesVelocity> {
        let d = self.dlp(sigma, targets)?;
        let s = self.slp(sigma, targets)?;
        Ok(d.iter().zip(&s).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect())
    }
}

pub fn stokes_slp_eval(curve: &Curve, sigma: &[[f64; 2]], targets: &TargetBatch) -> Result<StokesVelocity> {
    StokesEvaluator::with_defaults(curve.clone())?.slp(sigma, targets)
}

pub fn stokes_dlp_eval(curve: &Curve, sigma: &[[f64; 2]], targets: &TargetBatch, beta: f64) -> Result<StokesVelocity> {
    StokesEvaluator::new(curve.clone(), CloseOptions::default(), beta)?.dlp(sigma, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveSpec;
    use crate::native;

    fn star(n: usize) -> Curve {
        CurveSpec::star(0.3, 5, n).build().unwrap()
    }

    #[test]
    fn split_examples() {
        let (t1, t2) = complex_density_split(&[[3.0, 4.0]], &[C64::new(1.0, 0.0)]);
        assert_eq!((t1[0], t2[0]), (C64::new(3.0, 4.0), C64::new(0.0, 0.0)));
        let (t1, t2) = complex_density_split(&[[3.0, 4.0]], &[C64::new(0.0, 1.0)]);
        assert!(t1[0].norm() < 1e-15);
        assert!((t2[0] - C64::new(4.0, -3.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_density_gives_zero() {
        let c = star(64);
        let z = vec![[0.0; 2]; 64];
        let t = TargetBatch::interior(vec![C64::new(0.1, 0.2), c.nodes()[5] * 0.99]);
        let ev = StokesEvaluator::with_defaults(c).unwrap();
        for u in ev.slp(&z, &t).unwrap().iter().chain(&ev.dlp(&z, &t).unwrap()) {
            assert_eq!(*u, [0.0, 0.0]);
        }
    }

    #[test]
    fn constant_dlp_identity() {
        // the Cauchy term involves n/|n|-type factors that the star needs
        // a few hundred nodes to resolve
        let c = star(384);
        let sigma = vec![[0.6, -1.3]; 384];
        // far-field check of the identity with a fine plain trapezoid rule
        let fine = star(4096);
        let u = native::stokes_dlp(&fine, &vec![[0.6, -1.3]; 4096], C64::new(0.05, -0.1));
        assert!((u[0] + 0.6).abs() < 1e-13 && (u[1] - 1.3).abs() < 1e-13);
        let mut inside = vec![C64::new(0.05, -0.1)];
        let mut outside = vec![C64::new(2.0, 1.0)];
        for j in [0, 39, 150, 303] {
            let (y, n) = (c.nodes()[j], c.normals()[j]);
            for d in [1e-12, 1e-6, 1e-3, 1e-1] {
                inside.push(y - d * n);
                outside.push(y + d * n);
            }
        }
        let ev = StokesEvaluator::with_defaults(c).unwrap();
        for u in ev.dlp(&sigma, &TargetBatch::interior(inside)).unwrap() {
            assert!((u[0] + 0.6).abs() <= 1e-11 && (u[1] - 1.3).abs() <= 1e-11, "{u:?}");
        }
        for u in ev.dlp(&sigma, &TargetBatch::exterior(outside)).unwrap() {
            assert!(u[0].abs() <= 1e-11 && u[1].abs() <= 1e-11, "{u:?}");
        }
    }

    #[test]
    fn matches_native_far_from_curve() {
        let c = star(256);
        let sigma: Vec<[f64; 2]> = c.params().iter().map(|s| [(2.0 * s).cos() + 0.3, (3.0 * s).sin() - 0.2 * s.cos()]).collect();
        let ev = StokesEvaluator::with_defaults(c.clone()).unwrap();
        let inside = vec![C64::new(0.0, 0.0), C64::new(0.1, -0.15)];
        let outside = vec![C64::new(2.0, 0.0), C64::new(-1.5, 1.6), C64::new(0.3, -2.1)];
        for (pts, t) in [(&inside, TargetBatch::interior(inside.clone())), (&outside, TargetBatch::exterior(outside.clone()))] {
            let s = ev.slp(&sigma, &t).unwrap();
            let d = ev.dlp(&sigma, &t).unwrap();
            for (k, &x) in pts.iter().enumerate() {
                let (sn, dn) = (native::stokes_slp(&c, &sigma, x), native::stokes_dlp(&c, &sigma, x));
                for m in 0..2 {
                    assert!((s[k][m] - sn[m]).abs() <= 1e-12, "slp {x} {:?} {:?}", s[k], sn);
                    assert!((d[k][m] - dn[m]).abs() <= 1e-12, "dlp {x} {:?} {:?}", d[k], dn);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_beta() {
        assert_eq!(StokesEvaluator::new(star(16), CloseOptions::default(), 0.5).unwrap_err(), Error::BadFactor(0.5));
    }
}
