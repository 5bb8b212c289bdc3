use thiserror::Error;

/// Errors produced by graph construction, model validation and the exact solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("agent index {index} out of range for {n} agents")]
    AgentOutOfRange { index: usize, n: usize },
    #[error("invalid joint action: {0}")]
    InvalidAction(String),
    #[error("invalid adversary: {0}")]
    InvalidAdversary(String),
    #[error("graph is not a ring")]
    NotARing,
    #[error("{what}: n = {n} exceeds the cap of {cap}")]
    TooLarge { what: &'static str, n: usize, cap: usize },
    #[error("states differ in {0} agents; a transition changes exactly one")]
    NotSingleFlip(u32),
    #[error("stationary solve failed: residual {residual:e} exceeds {tolerance:e}")]
    StationaryResidual { residual: f64, tolerance: f64 },
    #[error("hitting-time system is singular: target unreachable")]
    Unreachable,
    #[error("stability is not threshold-like in alpha: {0}")]
    NonMonotone(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
