use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("budget violation: {0}")]
    Budget(String),
    #[error("bound violated: {0}")]
    BoundViolation(String),
    #[error("no qualifying branch: {0}")]
    NoBranch(String),
    #[error("invariant broken: {0}")]
    Invariant(String),
    #[error("no free active box")]
    NoFreeActiveBox,
}

pub type Result<T> = std::result::Result<T, Error>;
