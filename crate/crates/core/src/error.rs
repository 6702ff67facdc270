use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid product range {from}..={to} over {len} factors (1-based, from <= to required)")]
    Range { from: usize, to: usize, len: usize },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid converter parameters: {0}")]
    Parameter(String),

    /// `I - Π` (or the analogous half-cycle operator) is singular or too
    /// ill-conditioned to solve for a periodic orbit.
    #[error("marginal system: condition estimate {condition:.3e} exceeds limit; eigenvalues {eigenvalues:?}")]
    Marginal {
        condition: f64,
        eigenvalues: Vec<Complex64>,
    },

    #[error("z = {z} lies within {distance:.3e} of eigenvalue {eigenvalue} of the half-cycle transition")]
    ResolventSingular {
        z: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error("similarity transform is singular: {0}")]
    SimilaritySingular(String),

    #[error("no periodic convergence after {periods} periods (last residual {residual:.3e})")]
    Convergence { periods: usize, residual: f64 },

    #[error("perturbation drives a subinterval duration negative: {0}")]
    Amplitude(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
