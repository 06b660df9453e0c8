use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular matrix encountered in linear solve")]
    Singular,

    #[error("Krylov start vector is zero")]
    ZeroStartVector,

    #[error("operator is not symmetric")]
    NotSymmetric,

    #[error("no cached phi_{index} for node {node}")]
    MissingCacheEntry { node: String, index: usize },

    #[error("problem has no exact solution")]
    MissingExact,

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    /// A non-finite value appeared in an internal stage (`stage` is the stage
    /// index, `s + 1` for the final combination).
    #[error("non-finite value in stage {stage}{}", step.map(|n| format!(" at step {n}")).unwrap_or_default())]
    Divergence { stage: usize, step: Option<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed tree string `{0}`")]
    TreeSyntax(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
