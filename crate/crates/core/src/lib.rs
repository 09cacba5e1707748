//! Spectrally accurate close evaluation of 2D Laplace and Stokes layer
//! potentials on smooth closed curves, with Nyström solvers for the
//! associated boundary value problems.

pub mod bie;
pub mod cauchy;
pub mod curve;
pub mod error;
pub mod gmres;
pub mod laplace;
pub mod multibody;
pub mod native;
pub mod spectral;
pub mod stokes;

pub use num_complex::Complex64 as C64;

pub use cauchy::{ExteriorAnchor, Side, TargetBatch};
pub use curve::{Curve, CurveSpec, Density, Location};
pub use error::{Error, Result};
pub use bie::{solve_bvp, BvpSpec, Condition, Equation, Representation};
pub use gmres::GmresConfig;
pub use laplace::{CloseOptions, LaplaceEvaluator};
pub use multibody::{solve_multibody, MultibodyOperator};
pub use stokes::StokesEvaluator;
