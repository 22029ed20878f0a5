use thiserror::Error;

/// Failure modes shared by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("argument {0} is within the pole epsilon of the lattice (2πi/ln q)Z")]
    Pole(String),

    #[error("tolerance {tol:e} not reached within budget of {budget} terms (last tail bound {bound:e})")]
    BudgetExceeded { tol: f64, budget: usize, bound: f64 },

    #[error("series cancellation: {0}")]
    Cancellation(String),

    #[error("{0} lies within the standoff of the spectrum")]
    Spectrum(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("lattice window too small: {0}")]
    WindowTooSmall(String),

    #[error("function is not radial: {0}")]
    NotRadial(String),

    #[error("profile carries zero-frequency mass {0:e}; spectral operations act on mean-zero profiles")]
    ZeroFrequencyMass(f64),

    #[error("quadrature did not converge: node doubling changed the result by {0:e}")]
    Quadrature(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
