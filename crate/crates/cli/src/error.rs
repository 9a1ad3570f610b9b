use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the experiment harness.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible scheme {scheme}: {source}")]
    Infeasible {
        scheme: String,
        #[source]
        source: layerpc::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: layerpc::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed CSV: {0}")]
    Parse(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for infeasible
    /// schemes, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible { .. } => 3,
            CliError::Core { source, .. } => match source {
                layerpc::Error::InvalidParameter(_) | layerpc::Error::WindowTooSmall { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Csv { .. } | CliError::Parse(_) => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Wraps a core error raised while building `scheme`: design failures
    /// become [`CliError::Infeasible`], bad parameters config errors.
    pub(crate) fn from_design(scheme: &str, source: layerpc::Error) -> Self {
        match source {
            layerpc::Error::Infeasible { .. }
            | layerpc::Error::InfeasibleClosedForm { .. }
            | layerpc::Error::DegenerateLayer { .. } => CliError::Infeasible {
                scheme: scheme.to_string(),
                source,
            },
            other => CliError::Core {
                context: format!("scheme {scheme}"),
                source: other,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
