use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("infeasible trimming: {0}")]
    Feasibility(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("malformed measure: {0}")]
    Measure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    Input(String),
    /// A stripe/slab plan whose counts violate the capacity condition.
    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),
    /// An oracle asked to run on an instance it cannot enumerate.
    #[error("refused: {0}")]
    Refused(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}
