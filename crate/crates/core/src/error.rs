use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Vector/matrix shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A factorization or linear solve failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterate became non-finite or unbounded where the scheme is
    /// guaranteed to converge; indicates a bug or an invalid problem.
    #[error("iterates diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    /// The requested combination of problem and method is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// JSON (de)serialization failure.
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}
