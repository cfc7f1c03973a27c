//! Scenario runner: JSON configs in, profile tables and summaries out.
//!
//! Exit status of the `mono5` binary: 0 on success, 1 when an enabled
//! invariant check fails or a computation errors, 2 on configuration errors.

pub mod config;
pub mod report;
pub mod run;

pub use config::{OutputKind, ScenarioConfig};
pub use report::{emit_report, Format, ReportBundle};
pub use run::{run_scenario, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(mono5_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl From<mono5_core::Error> for CliError {
    fn from(e: mono5_core::Error) -> Self {
        match e {
            mono5_core::Error::Config(m) => CliError::Config(m),
            mono5_core::Error::PremiseViolated(m) => CliError::Config(format!("recurrence premise violated: {m}")),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
