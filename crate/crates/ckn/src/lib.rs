//! Symmetric and non-symmetric extremal branches of the Caffarelli-Kohn-Nirenberg
//! interpolation inequalities on the cylinder C = R x S^{d-1}.
//!
//! The crate is organized bottom-up:
//! - [`analytic`]: closed-form exponents, thresholds, Gamma integrals, the explicit
//!   symmetric branch and spherical-harmonic constants;
//! - [`spectral`]: 1-D quadrature, linear boundary-value solves for the chi system
//!   and radial shooting for the Gagliardo-Nirenberg ground state;
//! - [`expansion`]: the bifurcation expansion at mu_FS (c_{p,d}, theta_2, xi^theta);
//! - [`continuation`]: finite-difference Newton continuation of the non-symmetric
//!   branch on the cylinder;
//! - [`classify`]: large-Lambda asymptotics and the Scenario 1 / Scenario 2 decision.

pub mod analytic;
pub mod classify;
pub mod continuation;
pub mod error;
pub mod expansion;
pub mod spectral;

pub use analytic::ProblemParams;
pub use error::{Error, Result};
