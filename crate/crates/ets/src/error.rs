use std::path::PathBuf;

/// Errors of the command-line driver, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] ets_core::Error),
}

pub type Result<T> = std::result::Result<T, DriverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Io = 1,
    Config = 2,
    Stiffness = 3,
    Numerical = 4,
}

impl DriverError {
    pub fn exit_code(&self) -> ExitCode {
        use ets_core::Error as E;
        match self {
            DriverError::Config(_) | DriverError::Checkpoint(_) => ExitCode::Config,
            DriverError::Io { .. } => ExitCode::Io,
            DriverError::Core(e) => match e {
                E::Stiffness { .. } => ExitCode::Stiffness,
                E::Numerical(_) | E::NonConvergence(_) | E::Singularity { .. } => {
                    ExitCode::Numerical
                }
                E::InvalidSpec(_)
                | E::Configuration(_)
                | E::FilterLocalization { .. }
                | E::Domain(_)
                | E::DimensionMismatch { .. } => ExitCode::Config,
            },
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DriverError {
    let path = path.into();
    move |source| DriverError::Io { path, source }
}
