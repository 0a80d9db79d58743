use thiserror::Error;

/// Failures surfaced by the design, evaluation and search routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A design parameter, boundary or option is outside its allowed range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// No design satisfying the requested constraints could be found.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A numerical routine failed (factorisation, root finding, quadrature).
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Inputs that are individually valid but do not belong together.
    #[error("inconsistent input: {0}")]
    Consistency(String),
    /// The triangular calibration did not reach its residual tolerance.
    #[error(
        "calibration residual {residual:.3e} above tolerance {tol:.1e} \
         (best alpha'={alpha_prime:.6}, beta'={beta_prime:.6})"
    )]
    Calibration {
        residual: f64,
        tol: f64,
        alpha_prime: f64,
        beta_prime: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
