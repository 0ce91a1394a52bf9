use thiserror::Error;

/// Errors produced by the core pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient road data: need at least 3 roads, found {0}")]
    InsufficientRoads(usize),

    #[error("cannot apportion energy: all AADT values are zero")]
    ZeroAadt,

    #[error("invalid energy total {0}: must be >= 0")]
    NegativeEnergy(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{file}:{line}: {msg}")]
    MalformedRow {
        file: String,
        line: u64,
        msg: String,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("undefined R\u{b2}: actual values are constant")]
    ConstantTarget,

    #[error("cell index {cell} out of range for {n}x{n} grid")]
    CellOutOfRange { cell: usize, n: usize },

    #[error("episode finished: all {0} placements used")]
    EpisodeFinished(usize),

    #[error("grid must be min-max normalized before use")]
    UnnormalizedGrid,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("candidate pool ({pool}) smaller than budget ({budget})")]
    PoolTooSmall { pool: usize, budget: usize },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
