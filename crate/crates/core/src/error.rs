use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    ConfigSyntax(String),

    #[error("config: missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("config: invalid value for `{key}`: {reason}")]
    InvalidValue { key: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("expansion point outside the surrogate domain: {0}")]
    ExpansionPoint(String),

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("infeasible scheme: {0}")]
    InfeasibleScheme(String),

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("subproblem at iteration {iteration} ended with status {status:?} ({detail})")]
    Subproblem { iteration: usize, status: SolveStatus, detail: String },

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
