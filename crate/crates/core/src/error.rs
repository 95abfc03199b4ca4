use std::path::PathBuf;

/// Errors raised anywhere in the library.
///
/// Variants are grouped by how a caller is expected to react: bad input,
/// numerical solver trouble, or a statistically ill-posed problem.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("unconverged: {0}")]
    Unconverged(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("{0}")]
    Unidentifiable(String),

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Strips `Row` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Row { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
