use thiserror::Error;

use crate::model::{Strategy, ValidationErrors};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ValidationErrors),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("unbounded per-path subproblem: effective source multiplier is zero")]
    UnboundedSubproblem,

    #[error("enumeration budget exceeded: {count} assignments > budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("oracle power solver did not converge: {0}")]
    OracleNonConvergence(String),

    #[error("strategy {0} is not supported by {1}")]
    UnsupportedStrategy(Strategy, &'static str),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
