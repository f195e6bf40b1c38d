//! Experiment driver for `qst-core`: config files, end-to-end runs, batch-size
//! sweeps and timing benchmarks, all writing CSV.

pub mod bench;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use qst_core::QstError;

pub use config::{ConfigError, ExperimentConfig};

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Io { path: PathBuf, source: std::io::Error },
    Core(QstError),
}

impl HarnessError {
    /// 2 for configuration and filesystem problems, 3 for a diverged run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io { .. } => 2,
            HarnessError::Core(QstError::Diverged { .. }) => 3,
            HarnessError::Core(QstError::Io(_)) => 2,
            HarnessError::Core(_) => 1,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "config error: {e}"),
            HarnessError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            HarnessError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Config(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Core(e) => Some(e),
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<QstError> for HarnessError {
    fn from(e: QstError) -> Self {
        HarnessError::Core(e)
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
