//! Axisymmetric Boussinesq-Abbott waves coupled to a heaving floating cylinder.
//!
//! The crate provides the special functions, the radial mesh, the non-local
//! regularizing operators, the trace-level ODE system, an RK4 time integrator
//! for the exterior wave problem, and the Laplace-domain tools for the
//! return-to-equilibrium (decay) test.

pub mod decay;
pub mod error;
pub mod grid;
pub mod nonlocal_ops;
pub mod params;
pub mod quad;
pub mod shode;
pub mod simulator;
pub mod specfun;

pub use error::{Error, Result};
pub use params::PhysParams;

/// Formats a number with 17 significant digits, the CSV convention of the crate.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
