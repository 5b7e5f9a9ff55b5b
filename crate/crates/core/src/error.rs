use thiserror::Error;

/// Errors raised anywhere in the geometry pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unexpected character {character:?} at byte {position}")]
    Lex { position: usize, character: char },

    #[error("parse error at byte {position}: expected {expected}")]
    Parse { position: usize, expected: String },

    #[error("unknown variable `{name}` at byte {position}")]
    UnknownVariable { name: String, position: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("point {point:?} is outside the chart: guard `{guard}` evaluated to {value}")]
    OutOfDomain {
        guard: String,
        value: f64,
        point: Vec<f64>,
    },

    #[error("degenerate metric (det = {det:e})")]
    DegenerateMetric { det: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("finite-difference stencil leaves the chart: {0}")]
    StencilOutOfDomain(String),

    #[error("maximum step count {0} exceeded")]
    MaxStepsExceeded(usize),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("series did not converge within {0} terms")]
    SeriesNotConverged(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("operation needs a metric connection, got a custom connection")]
    NeedsMetric,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
