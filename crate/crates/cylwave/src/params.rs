//! Dimensionless physical parameters.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// External vertical force applied to the cylinder.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Constant(f64),
    /// amplitude * sin(omega t)
    Sine { amplitude: f64, omega: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Forcing {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => *c,
            Forcing::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
            Forcing::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant(c) => write!(f, "Constant({c})"),
            Forcing::Sine { amplitude, omega } => write!(f, "Sine({amplitude}, {omega})"),
            Forcing::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Parameter bundle of the wave-structure problem.
#[derive(Debug, Clone)]
pub struct PhysParams {
    /// nonlinearity, in [0, 1)
    pub epsilon: f64,
    /// shallowness, in (0, 1) for time-domain runs; 0 allowed in Laplace-domain analysis
    pub kappa: f64,
    /// viscosity, in [0, 1)
    pub nu: f64,
    /// cylinder radius
    pub radius: f64,
    pub tau_buoy_sq: f64,
    /// wet-surface height at equilibrium
    pub h_i_eq: f64,
    pub forcing: Forcing,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            kappa: 0.3,
            nu: 0.0,
            radius: 1.0,
            tau_buoy_sq: 1.0,
            h_i_eq: 1.0,
            forcing: Forcing::Zero,
        }
    }
}

impl PhysParams {
    /// Linear parameter set with the given kappa, nu, radius and buoyancy.
    pub fn linear(kappa: f64, nu: f64, radius: f64, tau_buoy_sq: f64) -> Self {
        Self { kappa, nu, radius, tau_buoy_sq, ..Self::default() }
    }

    /// Checks the ranges required by the time-domain model.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(0.0..1.0).contains(&self.epsilon) {
            bad.push(format!("epsilon = {} not in [0, 1)", self.epsilon));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            bad.push(format!("kappa = {} not in (0, 1)", self.kappa));
        }
        if !(0.0..1.0).contains(&self.nu) {
            bad.push(format!("nu = {} not in [0, 1)", self.nu));
        }
        if !(self.radius > 0.0) {
            bad.push(format!("R = {} must be positive", self.radius));
        }
        if !(self.tau_buoy_sq > 0.0) {
            bad.push(format!("tau_buoy_sq = {} must be positive", self.tau_buoy_sq));
        }
        if !(self.h_i_eq > 0.0) {
            bad.push(format!("h_i_eq = {} must be positive", self.h_i_eq));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    /// Checks the ranges admissible for the Laplace-domain analysis
    /// (kappa = 0 allowed).
    pub fn validate_laplace(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.kappa >= 0.0 && self.kappa < 1.0) {
            bad.push(format!("kappa = {} not in [0, 1)", self.kappa));
        }
        if !(0.0..1.0).contains(&self.nu) {
            bad.push(format!("nu = {} not in [0, 1)", self.nu));
        }
        if !(self.radius > 0.0) {
            bad.push(format!("R = {} must be positive", self.radius));
        }
        if !(self.tau_buoy_sq > 0.0) {
            bad.push(format!("tau_buoy_sq = {} must be positive", self.tau_buoy_sq));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    /// True when eps (kappa^2 + nu) exceeds the weakly nonlinear regime threshold.
    pub fn regime_warning(&self) -> bool {
        self.epsilon * (self.kappa * self.kappa + self.nu) > 0.1
    }
}
