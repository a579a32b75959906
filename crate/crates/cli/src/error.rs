use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fdrel_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    row: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                fdrel_core::Error::InvalidGrid(_)
                | fdrel_core::Error::InvalidCurve(_)
                | fdrel_core::Error::InvalidSeries(_)
                | fdrel_core::Error::DimensionMismatch(_) => "invalid_data",
                fdrel_core::Error::TooFewObservations { .. } => "too_few_observations",
                fdrel_core::Error::BlockTooLong { .. } | fdrel_core::Error::DegenerateWindow { .. } => {
                    "window_too_short"
                }
                fdrel_core::Error::Unknown { .. } => "unknown_name",
                _ => "invalid_config",
            },
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Table { .. } => "invalid_table",
            CliError::Argument(_) => "invalid_argument",
            CliError::ConfigFile { .. } => "config_file",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}` on a single line.
    pub fn to_json(&self) -> String {
        let (row, column) = match self {
            CliError::Parse { row, column, .. } => (Some(*row), Some(*column)),
            _ => (None, None),
        };
        let obj = ErrorObject {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
                row,
                column,
            },
        };
        serde_json::to_string(&obj).expect("error object serializes")
    }
}
