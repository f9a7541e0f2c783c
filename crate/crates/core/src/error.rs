//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("PLY parse error at line {line}: {message}")]
    Ply { line: usize, message: String },

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("descriptor shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
