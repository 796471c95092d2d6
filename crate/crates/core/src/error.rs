use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Pauli character {found:?} at position {position}")]
    InvalidPauliChar { position: usize, found: char },

    #[error("empty Pauli label")]
    EmptyLabel,

    #[error("qubit count mismatch: expected {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("qubit count {0} out of range")]
    QubitCount(usize),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("state annihilated (norm {norm:e})")]
    Annihilated { norm: f64 },

    #[error("state is not normalized (norm deviation {0:e})")]
    NotNormalized(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bundled data checksum mismatch: expected {expected}, got {found}")]
    Checksum { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
