use thiserror::Error;

/// Errors raised by the counting, series and statistics kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation (e.g. `m = 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold (table too small, bad grid, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Intermediate values would leave the exact integer range of the kernel.
    #[error("range error: {0}")]
    Range(String),

    /// The requested size exceeds a hard feasibility limit of the algorithm.
    #[error("limit exceeded: {0}")]
    Limit(String),

    /// Allocation or other resource failure.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A gap-width or density description failed validation.
    #[error("invalid construction: {0}")]
    Construction(String),

    /// A mixture component has (numerically) vanishing scale at a quadrature node.
    #[error("singular mixture: modulus {value:e} at quadrature node {node:?}")]
    SingularMixture { node: Vec<f64>, value: f64 },

    /// A gap-width evaluation produced a non-finite value.
    #[error("diagnostic failure: non-finite {what} at x = {x}")]
    Diagnostic { what: &'static str, x: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
