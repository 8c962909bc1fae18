//! Error types shared across the library.

/// Errors produced by data ingestion, scoring, and search.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix that must be positive definite failed its Cholesky
    /// factorization. This signals an invariant violation upstream and is
    /// never patched over with jitter.
    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: String },

    #[error("feature column {column} has no observed entries")]
    EmptyFeatureColumn { column: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Parse failure with file position diagnostics (1-based row/column).
    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("no Monte Carlo samples consistent with premises {premises:?}; raise the sample count")]
    NoConsistentSamples { premises: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn not_pd(context: impl Into<String>) -> Self {
        Error::NotPositiveDefinite {
            context: context.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
