use thiserror::Error;

/// Errors raised anywhere in the pricing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time grid error: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("word of length {len} exceeds truncation level {level}")]
    Truncation { len: usize, level: usize },
    #[error("letter {letter} outside alphabet 1..={dim}")]
    Alphabet { letter: u8, dim: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("non-finite data: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("adaptedness violation: requested index {requested} beyond cutoff {cutoff}")]
    Adaptedness { requested: usize, cutoff: usize },
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Config errors map to exit code 2, numerical ones to 3.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::UnknownFeature(_) | Error::Dimension(_) | Error::Index(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
