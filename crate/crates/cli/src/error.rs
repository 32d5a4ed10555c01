use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] epinet_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 bad configuration, 3 precondition, 4 non-convergence, 5 i/o.
    pub fn code(&self) -> u8 {
        use epinet_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) => match e {
                E::InvalidParams(_)
                | E::InvalidUtility(_)
                | E::InvalidMix(_)
                | E::DimensionMismatch { .. }
                | E::InvalidArgument(_) => 2,
                E::Precondition(_) | E::TrivialRegime(_) => 3,
                E::NoBracket { .. } | E::NonConvergence(_) => 4,
            },
            CliError::Io { .. } => 5,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
