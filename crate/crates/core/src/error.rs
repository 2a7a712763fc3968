use thiserror::Error;

/// Failures raised while validating inputs or building a structure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("box {id} is malformed: {reason}")]
    Malformed { id: u32, reason: String },

    #[error("boxes {a} and {b} overlap")]
    NotDisjoint { a: u32, b: u32 },

    #[error("box {id} has the wrong shape: {reason}")]
    WrongShape { id: u32, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("query out of range: {0}")]
    QueryOutOfRange(String),

    #[error("input holds {got} items, limit is {limit}")]
    TooLarge { got: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
