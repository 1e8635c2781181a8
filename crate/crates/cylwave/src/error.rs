use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument lies on a branch cut or outside the domain of definition.
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition on an input argument is violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Unscaled evaluation would overflow.
    #[error("overflow: {0}")]
    Overflow(String),
    /// The mesh does not resolve the dispersive boundary layer.
    #[error("under-resolved boundary layer: {0}")]
    Resolution(String),
    /// The water column thickness dropped below the admissible minimum.
    #[error("water column collapse: min h = {min_h:.6e} at r = {r:.6}")]
    WaterColumnCollapse { min_h: f64, r: f64 },
    /// A closed form was requested outside the parameter cell where it exists.
    #[error("no closed form for this parameter case: {0}")]
    CaseMismatch(String),
    /// An internal linear system was singular.
    #[error("singular system: {0}")]
    Singular(String),
    /// An iterative method failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
