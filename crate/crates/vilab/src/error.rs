//! Error taxonomy for the laboratory, grouped by how callers recover:
//! configuration problems, infeasible inputs, solver breakdowns, and
//! optimizer breakdowns map to distinct CLI exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad grid/data/option combinations caught before any numerics run.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs that violate a checker or solver precondition.
    #[error("infeasible input: {0}")]
    Infeasible(String),

    /// Complementarity solver failed to converge or diverged.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Line search stalled or descent broke down.
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    /// Numerical breakdown outside the iterative solvers (eigen iteration,
    /// indefinite matrix, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
