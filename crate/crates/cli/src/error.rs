use std::path::PathBuf;

use gamma_stft::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Read { .. } => EXIT_CONFIG,
            CliError::Write { .. } => EXIT_FAIL,
            CliError::Numeric(e) => match e {
                Error::BoxGuard { .. }
                | Error::GridTooSmall { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::IterationLimit => EXIT_GUARD,
                Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::ExhaustionIndexTooSmall { .. } => {
                    EXIT_CONFIG
                }
                _ => EXIT_FAIL,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            EXIT_CONFIG => "config",
            EXIT_GUARD => "numerical_guard",
            _ => "failure",
        }
    }

    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Config { key, .. } => Some(key),
            _ => None,
        }
    }
}
