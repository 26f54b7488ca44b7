use thiserror::Error;

/// Errors raised by the library. Every variant maps onto one of the CLI
/// exit classes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("eigensolver did not converge for matrix {matrix_hash:016x} ({converged} of {dim} eigenvalues found)")]
    NoConvergence {
        matrix_hash: u64,
        dim: usize,
        converged: usize,
        partial: Vec<num_complex::Complex64>,
    },

    #[error("singular matrix encountered at pivot {0}")]
    Singular(usize),

    #[error("decay envelope fit failed: {0}")]
    EnvelopeFit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for precondition failures, 3 for everything
    /// that indicates an internal or environment problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange { .. } => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
