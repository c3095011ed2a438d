use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Schema, unit or validation-gate failure in a scenario file.
    #[error("{0}")]
    Scenario(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] optobind_core::Error),

    /// A numerical check that completed but did not pass.
    #[error("{0}")]
    CheckFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    code: i32,
    message: String,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::CheckFailed(_) => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_VALIDATION => "validation",
            EXIT_NUMERIC => "numeric",
            _ => "io",
        }
    }

    /// One-line JSON description for stderr.
    pub fn machine_line(&self) -> String {
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("error line serializes")
    }
}
