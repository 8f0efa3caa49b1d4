use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    /// `a^n` left the double range while iterating a diagonal-affine map.
    #[error("iterate out of floating-point range at n = {n}")]
    IterateRange { n: i64 },

    #[error("non-positive value {value} at node `{node}`")]
    NonPositive { node: &'static str, value: f64 },

    /// The value is strictly positive but below the double range; use
    /// the log2 evaluation path.
    #[error("positive value 2^{log2} is not representable as f64")]
    Underflow { log2: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map `{0}` is not diagonal-affine; use sampled_search instead")]
    UnsupportedMap(String),

    #[error("margin {margin} is degenerate (relative margin must lie in [0, 1))")]
    DegenerateMargin { margin: f64 },

    #[error("forward-to-full limit did not converge (last diameters: {diameters:?})")]
    NonConvergence { diameters: Vec<f64> },

    #[error("search grid has {0} points (limit 1e8)")]
    GridTooLarge(u128),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
