//! Experiment files, the parallel Monte Carlo driver and the per-kind
//! commands behind the command-line tool.

pub mod commands;
pub mod config;
pub mod montecarlo;

use thiserror::Error;

use crate::deterministic::DeterministicError;
use crate::integrator::SimError;
use crate::stationary::StationaryError;

pub use commands::{execute, CommandOutput};
pub use config::{parse_config, parse_entries, ConfigError, Entries, Experiment, Kind};
pub use montecarlo::{hitting_experiment, run_monte_carlo, HittingStats, MonteCarloSummary};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(SimError),
    #[error(transparent)]
    Stationary(StationaryError),
    #[error(transparent)]
    Deterministic(#[from] DeterministicError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Sim(SimError::RefusedNoSolutionRegime(_))
            | HarnessError::Sim(SimError::CornerStartNotPermitted(_))
            | HarnessError::Deterministic(DeterministicError::NoDeterministicSolution(_)) => {
                EXIT_REFUSED
            }
            HarnessError::Sim(_) | HarnessError::Deterministic(_) => EXIT_CONFIG,
            HarnessError::Stationary(StationaryError::EmptySample) => EXIT_NUMERIC,
            HarnessError::Stationary(_) => EXIT_CONFIG,
            HarnessError::Numeric(_) => EXIT_NUMERIC,
            HarnessError::Io(_) => EXIT_IO,
        }
    }
}
