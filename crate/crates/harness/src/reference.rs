//! Closed-form reference solutions used to manufacture boundary data and
//! measure errors.

use std::f64::consts::PI;

use layerpot::{Curve, Location, Side, C64};
use serde::{Deserialize, Serialize};

/// Point force `force` at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stokeslet {
    pub position: [f64; 2],
    pub force: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReferenceField {
    /// `u = Re Σ 1/(x − b)`.
    ComplexPole { poles: Vec<[f64; 2]> },
    /// `u = Re e^{i(1+x)}`.
    Entire,
    /// `u = Re cos(kx) = cos(k x₁) cosh(k x₂)`.
    HarmonicTrig { k: f64 },
    /// Stokes flow of point forces.
    StokesletSum { stokeslets: Vec<Stokeslet> },
}

fn c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl ReferenceField {
    pub fn pole(b: C64) -> Self {
        ReferenceField::ComplexPole { poles: vec![[b.re, b.im]] }
    }

    pub fn is_stokes(&self) -> bool {
        matches!(self, ReferenceField::StokesletSum { .. })
    }

    /// Singular points of the field.
    pub fn singularities(&self) -> Vec<C64> {
        match self {
            ReferenceField::ComplexPole { poles } => poles.iter().map(|&p| c(p)).collect(),
            ReferenceField::StokesletSum { stokeslets } => stokeslets.iter().map(|s| c(s.position)).collect(),
            _ => vec![],
        }
    }

    /// Checks that every singularity lies strictly on the other side of
    /// `curve` from where the field is evaluated.
    pub fn check_side(&self, curve: &Curve, side: Side) -> anyhow::Result<()> {
        let wrong = match side {
            Side::Interior => Location::Interior,
            Side::Exterior => Location::Exterior,
        };
        for p in self.singularities() {
            let loc = curve.locate(p);
            if loc == wrong || matches!(loc, Location::Node(_)) {
                anyhow::bail!("singularity at {p} lies in the {side:?} evaluation region");
            }
        }
        Ok(())
    }

    /// `(F, F')` of the holomorphic function with `u = Re F`.
    fn holomorphic(&self, x: C64) -> Option<(C64, C64)> {
        match self {
            ReferenceField::ComplexPole { poles } => Some(poles.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(f, d), &b| {
                let r = 1.0 / (x - c(b));
                (f + r, d - r * r)
            })),
            ReferenceField::Entire => {
                let e = (C64::i() * (1.0 + x)).exp();
                Some((e, C64::i() * e))
            }
            ReferenceField::HarmonicTrig { k } => Some(((k * x).cos(), -k * (k * x).sin())),
            ReferenceField::StokesletSum { .. } => None,
        }
    }

    /// Laplace value and gradient.
    pub fn laplace(&self, x: C64) -> Option<(f64, [f64; 2])> {
        self.holomorphic(x).map(|(f, d)| (f.re, [d.re, -d.im]))
    }

    /// `∂u/∂n` for unit normal `n`.
    pub fn normal_derivative(&self, x: C64, n: C64) -> Option<f64> {
        self.laplace(x).map(|(_, g)| g[0] * n.re + g[1] * n.im)
    }

    fn stokeslets(&self) -> Option<&[Stokeslet]> {
        match self {
            ReferenceField::StokesletSum { stokeslets } => Some(stokeslets),
            _ => None,
        }
    }

    pub fn velocity(&self, x: C64) -> Option<[f64; 2]> {
        let mut u = [0.0; 2];
        for s in self.stokeslets()? {
            let (r, f) = (x - c(s.position), s.force);
            let rho2 = r.norm_sqr();
            let rf = r.re * f[0] + r.im * f[1];
            let l = -0.5 * rho2.ln();
            u[0] += (l * f[0] + rf * r.re / rho2) / (4.0 * PI);
            u[1] += (l * f[1] + rf * r.im / rho2) / (4.0 * PI);
        }
        Some(u)
    }

    pub fn pressure(&self, x: C64) -> Option<f64> {
        Some(
            self.stokeslets()?
                .iter()
                .map(|s| {
                    let r = x - c(s.position);
                    (r.re * s.force[0] + r.im * s.force[1]) / (2.0 * PI * r.norm_sqr())
                })
                .sum(),
        )
    }

    /// Velocity gradient, `g[i][j] = ∂u_i/∂x_j`.
    pub fn velocity_gradient(&self, x: C64) -> Option<[[f64; 2]; 2]> {
        let mut g = [[0.0; 2]; 2];
        for s in self.stokeslets()? {
            let r = x - c(s.position);
            let (r, f) = ([r.re, r.im], s.force);
            let rho2 = r[0] * r[0] + r[1] * r[1];
            let rf = r[0] * f[0] + r[1] * f[1];
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    g[i][j] += (-r[j] * f[i] + f[j] * r[i] + rf * delta) / rho2 / (4.0 * PI)
                        - 2.0 * rf * r[i] * r[j] / (rho2 * rho2) / (4.0 * PI);
                }
            }
        }
        Some(g)
    }

    /// Traction `−p n + (∇u + ∇uᵀ)n`.
    pub fn traction(&self, x: C64, n: C64) -> Option<[f64; 2]> {
        let (p, g) = (self.pressure(x)?, self.velocity_gradient(x)?);
        let n = [n.re, n.im];
        let mut t = [0.0; 2];
        for i in 0..2 {
            t[i] = -p * n[i] + (0..2).map(|j| (g[i][j] + g[j][i]) * n[j]).sum::<f64>();
        }
        Some(t)
    }
}

/// Example 3 point forces: five sources inside radius 0.6, or the same
/// angles pushed out to radius 2 for interior problems.
pub fn example3_stokeslets(interior_problem: bool) -> Vec<Stokeslet> {
    const SOURCES: [([f64; 2], [f64; 2]); 5] = [
        ([0.30, 0.10], [1.0, 0.5]),
        ([-0.25, 0.35], [-0.6, 0.9]),
        ([-0.40, -0.20], [0.7, -0.8]),
        ([0.10, -0.45], [-0.9, -0.3]),
        ([0.00, 0.00], [0.4, 0.6]),
    ];
    SOURCES
        .iter()
        .enumerate()
        .map(|(k, &(p, f))| {
            let position = if interior_problem {
                // the central source has no direction; give it its own angle
                let th = if p == [0.0, 0.0] { 2.0 * PI * k as f64 / 5.0 } else { p[1].atan2(p[0]) };
                [2.0 * th.cos(), 2.0 * th.sin()]
            } else {
                p
            };
            let scale = if interior_problem { 1.5 } else { 0.6 };
            Stokeslet { position, force: [scale * f[0], scale * f[1]] }
        })
        .collect()
}
