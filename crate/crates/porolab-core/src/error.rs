use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or field violates the domain geometry.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A geometric clearance precondition does not hold.
    #[error("geometry violation: {0}")]
    Geometry(String),

    /// Incompatible inputs (e.g. mismatched grids).
    #[error("usage error: {0}")]
    Usage(String),

    /// An iterative solve diverged or failed to make progress.
    #[error("solver error: {0}")]
    Solver(String),

    /// Config file could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Assumption validation failed and the run was not forced.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Expression parse or evaluation failure.
    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
