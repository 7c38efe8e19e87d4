use std::path::{Path, PathBuf};

use statvar::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed CSV: {msg}", path.display())]
    BadCsv { path: PathBuf, msg: String },
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}", describe(.0))]
    Compute(#[from] Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn bad_csv(path: &Path, msg: impl Into<String>) -> Self {
        Self::BadCsv {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    /// 1 for computational failures, 2 for usage and I/O errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Compute(
                Error::InvalidConfig(_)
                | Error::NonPositiveHyper(_)
                | Error::DimensionMismatch(_)
                | Error::InfiniteVariance { .. },
            ) => 2,
            Self::Compute(_) => 1,
            _ => 2,
        }
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::AllDivergent { .. } => format!(
            "{e}\nhint: raise hmc.target_accept (e.g. 0.95), lower hmc.max_leapfrog, \
             or set data.standardise = true so the series are on unit scale"
        ),
        _ => e.to_string(),
    }
}
