use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("`{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("`{field}`: {source}")]
    Core {
        field: String,
        #[source]
        source: kdv5::Error,
    },

    #[error("{0}")]
    Numerical(kdv5::Error),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn core(field: impl Into<String>, source: kdv5::Error) -> Self {
        CliError::Core {
            field: field.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, field) = match self {
            CliError::Read { path, .. } | CliError::Write { path, .. } => ("io", Some(path.display().to_string())),
            CliError::Parse(_) => ("validation", None),
            CliError::Invalid { field, .. } | CliError::Core { field, .. } => ("validation", Some(field.clone())),
            CliError::Numerical(_) => ("numerical", None),
        };
        ErrorRecord {
            kind,
            exit_code: self.exit_code(),
            field,
            message: self.to_string(),
        }
    }
}

/// Classifies an error raised while a study runs: refusals that the
/// configuration could have avoided are validation failures, everything else
/// is a numerical abort.
pub fn from_run(field: &str, e: kdv5::Error) -> CliError {
    use kdv5::Error as E;
    match e {
        E::InvalidGrid(_)
        | E::InvalidParameter { .. }
        | E::GridMismatch { .. }
        | E::StabilityGuard { .. }
        | E::Unsupported(_)
        | E::WindowNotCovered { .. }
        | E::PoleProximity { .. }
        | E::ResourceLimit { .. } => CliError::core(field, e),
        _ => CliError::Numerical(e),
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}
