use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: poldqc_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 parse, 3 validation, 4 convergence, 5 numerical, 6 I/O.
    pub fn exit_code(&self) -> i32 {
        use poldqc_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io { .. } => 6,
            CliError::Stage { source, .. } => match source {
                E::Parse { .. } => 2,
                E::InvalidParameter(_) | E::Shape(_) | E::Anharmonicity(_) => 3,
                E::NonConvergence { .. } | E::Calibration(_) => 4,
                E::Numerical(_) | E::BoundaryLeak { .. } | E::DegenerateInput(_) | E::Partition(_) => 5,
                E::Io(_) => 6,
            },
        }
    }
}

/// Core errors raised while checking a configuration count as validation failures.
impl From<poldqc_core::Error> for CliError {
    fn from(e: poldqc_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for poldqc_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
