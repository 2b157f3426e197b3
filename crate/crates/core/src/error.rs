use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("unsupported dimension {0}, expected 1 or 2")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate sample: dimension {dim} has zero spread")]
    DegenerateDimension { dim: usize },

    #[error("too few observations: need at least {need}, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("epsilon {eps} leaves the submodel (1 + eps * d <= 0 at observation {index})")]
    EpsilonDomain { eps: f64, index: usize },

    #[error("density pair is defined on a different grid")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown design {0:?} (expected gaussian, triangle or uniform)")]
    UnknownDesign(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("{malformed} of {total} rows are malformed")]
    TooManyMalformed { malformed: usize, total: usize },

    #[error("no category has at least {0} incidents in both windows")]
    NoEligibleCategories(usize),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
