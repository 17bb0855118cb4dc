use std::io;
use std::path::PathBuf;

use zigzag_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid config file {}: {source}", path.display())]
    ConfigFile {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for I/O, 2 for bad input or configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } | Self::Core(CoreError::Io(_)) => 1,
            Self::Core(CoreError::Training { .. }) => 3,
            Self::Core(_) | Self::ConfigFile { .. } | Self::Invalid(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let io = || io::Error::new(io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::io("x", io()).exit_code(), 1);
        assert_eq!(CliError::Core(CoreError::Io(io())).exit_code(), 1);
        assert_eq!(
            CliError::Core(CoreError::Validation("t".into())).exit_code(),
            2
        );
        assert_eq!(CliError::Core(CoreError::EmptyInput).exit_code(), 2);
        assert_eq!(CliError::Invalid("x".into()).exit_code(), 2);
        let training = CoreError::Training {
            step: 4,
            message: "loss is NaN".into(),
        };
        assert_eq!(CliError::Core(training).exit_code(), 3);
    }
}
