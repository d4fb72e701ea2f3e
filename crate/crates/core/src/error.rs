use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("anharmonicity must be positive (omega1 - omega2 = {0} cm^-1)")]
    Anharmonicity(f64),

    #[error("{stage} did not converge after {iterations} iterations (last residual {residual:e}){}", .context.as_deref().map(|c| format!(" at {c}")).unwrap_or_default())]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        context: Option<String>,
    },

    #[error("boundary leak: edge amplitude {amplitude:e} exceeds {limit:e} ({what})")]
    BoundaryLeak {
        what: String,
        amplitude: f64,
        limit: f64,
    },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
