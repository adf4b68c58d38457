use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{context}: matrix not positive definite after jitter up to {max_jitter:e}")]
    NotPositiveDefinite { context: String, max_jitter: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Prefixes the message with `ctx`, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
            Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{ctx}: {m}")),
            Error::NotPositiveDefinite { context, max_jitter } => Error::NotPositiveDefinite {
                context: format!("{ctx}: {context}"),
                max_jitter,
            },
            Error::Singular(m) => Error::Singular(format!("{ctx}: {m}")),
            Error::Sampler(m) => Error::Sampler(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
        }
    }
}

pub(crate) fn dim_mismatch(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}
