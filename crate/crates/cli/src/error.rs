use std::io;
use std::path::PathBuf;

use safefirst_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("cannot parse {value:?} in column {column:?} at data row {row}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_)
            | Self::MissingColumn(_)
            | Self::Parse { .. }
            | Self::Csv(_)
            | Self::Io { .. }
            | Self::Json { .. } => 3,
            Self::Core(e) => match e {
                CoreError::InvalidParameter(_) | CoreError::InvalidActionSet(_) => 2,
                CoreError::SingularDesign { .. } | CoreError::NonConvergence { .. } => 4,
                _ => 3,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::MissingColumn("y".into()).exit_code(), 3);
        assert_eq!(
            CliError::from(CoreError::SingularDesign { action: 1 }).exit_code(),
            4
        );
        assert_eq!(
            CliError::from(CoreError::NonConvergence {
                grad_norm: 1.0,
                iterations: 3
            })
            .exit_code(),
            4
        );
        assert_eq!(
            CliError::from(CoreError::EmptyActionCell { action: 2 }).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(CoreError::InvalidParameter("k".into())).exit_code(),
            2
        );
        assert_eq!(CliError::io("a", io::Error::other("boom")).exit_code(), 3);
    }
}
