//! Scenario runner for exterior expansions of fully nonlinear elliptic equations:
//! configuration, solve/analyze pipeline, report emission and the acceptance registry.

// Negated comparisons are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod report;
pub mod run;
pub mod scenario;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0} assertion(s) failed")]
    Assertion(usize),
}

impl CliError {
    /// 0 pass, 1 assertion or run failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io(_) | CliError::Assertion(_) => 1,
        }
    }
}
