//! Instance generation, oracle verification and benchmarking over every
//! structure of `orthostab`.

pub mod bench;
pub mod instance;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("oracle mismatch\n{0}")]
    Mismatch(String),
    #[error(transparent)]
    Build(#[from] orthostab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
