use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("space grammar error at byte {position}: {message}")]
    Grammar { position: usize, message: String },

    #[error("metric file line {line}: {message}")]
    MetricParse { line: usize, message: String },

    #[error("not a metric: {0}")]
    NotAMetric(String),

    #[error("degenerate domain: seminorm needs at least 2 points, mask has {0}")]
    DegenerateDomain(usize),

    #[error("extension constant {constant} is below the restricted seminorm {seminorm}")]
    ExtensionConstant { constant: f64, seminorm: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error(
        "grid refused: {points} grid points exceeds limit {limit}; resolution h >= {required_resolution} is needed"
    )]
    GridRefused { points: f64, limit: f64, required_resolution: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
