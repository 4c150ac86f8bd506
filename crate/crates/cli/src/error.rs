use std::path::Path;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error{}: {message}", field.as_ref().map(|f| format!(" at {f}")).unwrap_or_default())]
    Config { field: Option<String>, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Core(#[from] sphgd_core::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    /// The experiment ran and wrote its outputs, but a check failed.
    #[error("experiment completed with failed checks: {0}")]
    Flagged(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::MissingColumn(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Io { .. } => "io",
            Self::Core(_) => "numerical",
            Self::Csv(_) => "csv",
            Self::MissingColumn(_) => "missing_column",
            Self::Flagged(_) => "flagged",
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let field = match self {
            Self::Config { field, .. } => field.clone(),
            Self::MissingColumn(c) => Some(c.clone()),
            _ => None,
        };
        json!({ "error": { "kind": self.kind(), "field": field, "message": self.to_string(), "exit_code": self.exit_code() } })
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Csv(format!("json: {e}"))
    }
}
