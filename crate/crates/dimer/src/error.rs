use std::io;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// The request was well formed but left the physical validity regime.
pub const EXIT_PHYSICS: i32 = 1;
/// Malformed command line, configuration or parameters.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] dimer_core::Error),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown config key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },

    #[error("mode conflict: {0}")]
    ModeConflict(String),

    #[error("missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("{0}")]
    Usage(String),

    #[error("oracle disagreement {max_diff:.3e} exceeds tolerance {tolerance:e}")]
    OracleMismatch { max_diff: f64, tolerance: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_physics_validity() => EXIT_PHYSICS,
            CliError::OracleMismatch { .. } => EXIT_PHYSICS,
            _ => EXIT_USAGE,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
