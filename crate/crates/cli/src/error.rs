use std::path::PathBuf;

/// Process exit status for input validation failures.
pub const EXIT_VALIDATION: i32 = 2;
/// Numerical solver failures.
pub const EXIT_SOLVER: i32 = 3;
/// Non-convergence or statistical unidentifiability.
pub const EXIT_STATISTICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fluxcoh_core::Error),

    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn config(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fluxcoh_core::Error as E;
        match self {
            CliError::Config { .. } => EXIT_VALIDATION,
            CliError::Write { .. } => 1,
            CliError::Core(e) => match e.root() {
                E::InvalidInput { .. } | E::Parse { .. } | E::Domain(_) | E::Io { .. } => EXIT_VALIDATION,
                E::Solver(_) | E::Unconverged(_) => EXIT_SOLVER,
                E::NonConvergence(_) | E::Unidentifiable(_) => EXIT_STATISTICAL,
                E::Row { .. } => EXIT_VALIDATION,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
