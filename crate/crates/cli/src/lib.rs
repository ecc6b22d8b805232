//! Experiment harness: config files, benchmark drivers and CSV/PGM output.

pub mod commands;
pub mod ini;
pub mod mri;
pub mod report;
pub mod settings;
pub mod signal;
pub mod theory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] qrm::QrmError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    /// 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<ini::IniError> for HarnessError {
    fn from(e: ini::IniError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<settings::SettingsError> for HarnessError {
    fn from(e: settings::SettingsError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}
