use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("negative transition probability {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("reward vector has zero 1-norm")]
    ZeroReward,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("unsupported spherical code: {0}")]
    UnsupportedCode(String),
    #[error("facet is degenerate: leave-one-out set has rank {rank}, need {needed}")]
    DegenerateFacet { rank: usize, needed: usize },
    #[error("no angle separates beta={beta} at eps={eps} (sin^2(theta/2) = {rhs} > 1)")]
    InfeasibleSeparation { beta: f64, eps: f64, rhs: f64 },
    #[error("beta={beta} too large for n={n}: {detail}")]
    BetaTooLarge { n: usize, beta: f64, detail: String },
    #[error("eps={eps} too large for n={n}: n*eps must be below 1")]
    EpsTooLarge { n: usize, eps: f64 },
    #[error("constructed row {row} leaves the probability simplex (min entry {min_entry})")]
    InvalidRow { row: usize, min_entry: f64 },
    #[error("denominator 1 + (n-2)cos(theta) = {value} is not positive")]
    DegenerateDenominator { value: f64 },
    #[error("bound is vacuous: ensemble size {eta} must exceed 1")]
    VacuousBound { eta: f64 },
    #[error("absolute continuity violated at row {row}, column {col}")]
    AbsoluteContinuityViolation { row: usize, col: usize },
    #[error("distribution has a zero entry at {index}")]
    ZeroEntry { index: usize },
    #[error("no instance with beta in window after {attempts} draws")]
    GenerationTimeout { attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
