//! Experiment harness for the boundary-aware time-evolving solver: config
//! parsing, problem wiring, run reports and the oracle suite behind
//! `teng-bc verify`.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod formats;
pub mod presets;
pub mod verify;

pub use compare::{compare_runs, Comparison};
pub use config::{parse_config, Boundary, ConfigError, Equation, ExperimentConfig, ReferenceKind};
pub use experiment::{build_problem, run_experiment, Problem, RunOutcome};

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("acceptance threshold not met: {0}")]
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Acceptance(_) => 3,
        }
    }
}

impl From<teng_bc_core::Error> for Failure {
    fn from(e: teng_bc_core::Error) -> Self {
        use teng_bc_core::Error;
        match e {
            Error::Config(m) | Error::Precondition(m) => Failure::Config(m),
            Error::Numeric(m) | Error::Internal(m) => Failure::Numeric(m),
        }
    }
}

pub(crate) fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}
