use thiserror::Error;

/// Errors raised by simulation, transforms and estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// Input or configuration violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A modulator state sits within `wall_delta` of a chamber wall (or outside the arc).
    #[error("wall proximity: {what} = {value:e}")]
    Wall { what: String, value: f64 },

    /// Step halving near a wall ran out of retries.
    #[error("wall retries exhausted on path {path_index} at t = {time}")]
    WallRetryExhausted { path_index: u64, time: f64 },

    /// NaN, infinity, overflow or a vanishing norm.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A query time lies outside the range a path or time change covers.
    #[error("{what} = {value} is out of range [{lo}, {hi})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for the failure classes the CLI reports with exit code 2.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::WallRetryExhausted { .. } | Error::Wall { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
