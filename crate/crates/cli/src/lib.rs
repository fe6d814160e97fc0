//! Library half of the `ekman` command-line driver: configuration parsing,
//! the run modes and the deterministic table writers. The binary in
//! `main.rs` is a thin argument-parsing shell over [`commands`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN inputs

pub mod commands;
pub mod config;
pub mod output;

use ekman::analysis::AnalysisError;
use ekman::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    /// Process exit code: 1 validation, 2 solver singularity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Analysis(_) => 1,
            CliError::Solver(e) => match e {
                SolverError::Profile(_) => 1,
                SolverError::IndexOutOfRange { .. } => 1,
                SolverError::SingularMargin { .. }
                | SolverError::SingularMatrix { .. }
                | SolverError::ResidualTooLarge { .. }
                | SolverError::AssemblyOverflow { .. }
                | SolverError::CoefficientOverflow { .. }
                | SolverError::CrossCheckMismatch { .. } => 2,
            },
        }
    }
}

/// Exit code for a failed verification run.
pub const EXIT_VERIFICATION_FAILED: i32 = 3;
