use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the model, the solvers and the run driver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "admissibility failure: lambda_beta * c_h_prime = {product} >= 1 \
         (lambda_beta = {lambda_beta}, c_h_prime = {c_h_prime})"
    )]
    Admissibility {
        product: f64,
        lambda_beta: f64,
        c_h_prime: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: expected {expected} cells, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {field} at cell {cell}")]
    NonFinite { field: &'static str, cell: usize },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("graph prox failure: {0}")]
    Graph(String),

    #[error("recovered selection violates graph membership at cell {cell} (residual {residual:e})")]
    GraphInconsistency { cell: usize, residual: f64 },

    #[error("positivity violation: {field} = {value:e} at cell {cell}, step {step}")]
    PositivityViolation {
        field: &'static str,
        cell: usize,
        value: f64,
        step: usize,
    },

    #[error("phase bound violation: chi = {value} at cell {cell}, step {step}")]
    PhaseBoundViolation { cell: usize, value: f64, step: usize },

    #[error("ledger monitor failed: {what} at step {step}")]
    LedgerViolation { what: String, step: usize },

    #[error("manufactured solution leaves the open phase domain: {0}")]
    MmsDomain(String),

    #[error("parse error at line {line}, key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Violations of a state invariant the scheme is supposed to preserve.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::PositivityViolation { .. }
                | Error::PhaseBoundViolation { .. }
                | Error::LedgerViolation { .. }
                | Error::GraphInconsistency { .. }
                | Error::NonFinite { .. }
        )
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Graph(_))
    }

    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidParameter(_)
                | Error::Admissibility { .. }
                | Error::Domain(_)
                | Error::MmsDomain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
