use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree functions on grids of size {0} and {1} have no common refinement")]
    IncompatibleGrids(usize, usize),

    #[error("no synchronous profile at this (K, q): kappa {kappa} < sup|Omega - mean| = {spread}")]
    NoProfile { kappa: f64, spread: f64 },

    #[error("eigenfunction is not L2-normalised (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("frequency model is not odd about x = 1/2; the closed-form spectrum does not apply")]
    NotOdd,

    #[error("Newton failed to converge after {iterations} iterations (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("bordered Jacobian is near-singular (condition estimate {condition:e}); close to a fold")]
    NearFold { condition: f64 },

    #[error("start state is not converged (residual {0:e})")]
    NotConverged(f64),

    #[error("no fold in the bracket: {0}")]
    NoFold(String),

    #[error("seed-state failure: {0}")]
    SeedState(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
