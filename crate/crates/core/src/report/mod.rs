//! Run configuration, CSV/SVG/JSON artifacts and the four commands behind
//! the `nozzle-shocks` binary.

pub mod commands;
pub mod config;
pub mod csv;
pub mod svg;

pub use commands::{cmd_oracle, cmd_solve, cmd_states, cmd_sweep};
pub use config::RunConfig;

use thiserror::Error;

use crate::error::Error;

/// Failure of a command, carrying the process exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Inadmissible(String),
    #[error("{}: {0}", .0.name())]
    Solver(Error),
    #[error("no parameter succeeded; first failure {0}")]
    AllFailed(String),
    #[error("oracle disagreement: {0}")]
    Oracle(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Inadmissible(_) => 2,
            Failure::Solver(_) | Failure::AllFailed(_) => 3,
            Failure::Oracle(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Config("x".into()).exit_code(), 1);
        assert_eq!(Failure::Inadmissible("x".into()).exit_code(), 2);
        assert_eq!(Failure::Solver(Error::NoRootInDomain).exit_code(), 3);
        assert_eq!(Failure::AllFailed("x".into()).exit_code(), 3);
        assert_eq!(Failure::Oracle("x".into()).exit_code(), 4);
        assert!(Failure::Solver(Error::NoRootInDomain).to_string().starts_with("NoRootInDomain"));
    }
}
