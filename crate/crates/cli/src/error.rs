use std::path::PathBuf;

use qsyn_core::ErrorClass;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] qsyn_core::Error),
    #[error("physical realizability check failed")]
    CheckFailed,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 0 ok, 1 usage or input, 2 infeasible, 3 numerical, 4 failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Parse { .. } | Self::Io { .. } => 1,
            Self::Core(e) => match e.class() {
                ErrorClass::Invalid => 1,
                ErrorClass::Infeasible => 2,
                ErrorClass::Numerical => 3,
            },
            Self::CheckFailed => 4,
        }
    }
}
