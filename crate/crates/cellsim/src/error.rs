use std::path::PathBuf;

use thiserror::Error;

/// Errors shared across the simulator modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A power split with zero pilot power cannot support channel estimation.
    #[error("degenerate power split: pilot power must be positive")]
    DegenerateSplit,

    /// Residual CFO outside the valid range for the ICI model.
    #[error("residual CFO {0} out of range, |eps| must be < 1")]
    CfoOutOfRange(f64),

    /// The stacked effective channels of a served set are rank deficient.
    #[error("singular user set: effective channel rows are linearly dependent")]
    SingularUserSet,

    /// An all-zero channel cannot be quantized to a direction.
    #[error("degenerate channel: cannot quantize an all-zero row")]
    DegenerateChannel,

    #[error("fairness index undefined for an all-zero throughput vector")]
    UndefinedFairness,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
