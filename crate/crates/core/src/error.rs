use std::path::PathBuf;

/// Everything that can go wrong in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of a kernel (e.g. a zero vector for the arc-cosine kernels).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A documented precondition does not hold for the supplied data.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gram matrix is not positive definite even with jitter {jitter:e} (lambda_min estimate {lambda_min:e})")]
    SingularGram { jitter: f64, lambda_min: f64 },

    #[error("non-finite loss at step {step}")]
    NonFinite { step: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularGram { .. } | Error::NonFinite { .. } | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
