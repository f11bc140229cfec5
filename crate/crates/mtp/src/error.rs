use thiserror::Error;

/// Errors produced by mesh construction, slab pitching, assembly and
/// propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh topology error: {0}")]
    Topology(String),

    #[error("tent pitching stalled: {0}")]
    PitchStall(String),

    #[error("causality violated: {0}")]
    Causality(String),

    #[error("singular operator: {0}")]
    Singular(String),

    /// NaN/Inf detected during propagation; carries the offending tent.
    #[error("numerical abort: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("mesh file error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
