use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qcd_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 numerical non-convergence, 4 simulation cap, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use qcd_core::Error as E;
        match self {
            CliError::Core(E::Config(_) | E::Domain(_) | E::Json(_) | E::IrregularChain(_)) => 2,
            CliError::Core(E::NonConvergence { .. } | E::Quadrature { .. }) => 3,
            CliError::Core(E::StepCap { .. } | E::TooManyCapped { .. }) => 4,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
