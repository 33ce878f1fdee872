use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only d = 1, 2, 3 are available")]
    UnsupportedDimension(usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hard-sphere violation between points {i} and {j} at distance {distance}")]
    HardSphereViolation { i: usize, j: usize, distance: f64 },

    #[error("point {index} is not a finite {dim}-vector")]
    InvalidPoint { index: usize, dim: usize },

    #[error("no admissible configuration found within the annealing budget")]
    BudgetTooSmall,

    #[error("density level {0} is outside (0, 1]")]
    LevelOutOfRange(f64),

    #[error("sigma = {0} is not in the integrable range (-d, 0)")]
    NonIntegrableSigma(f64),

    #[error("sigma = {0} is outside the admissible range for this functional")]
    SigmaOutOfRange(f64),

    #[error("truncation radius {r} is not resolved by grid spacing {h} (need r > 2h)")]
    ResolutionTooCoarse { r: f64, h: f64 },

    #[error("no plateau: successive values {0} and {1} differ beyond tolerance")]
    NoPlateau(f64, f64),

    #[error("kernel regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("initial configuration is not hard-sphere admissible: {0}")]
    InfeasibleInit(String),

    #[error("density support touches the computational box boundary")]
    SupportTouchesBoundary,

    #[error("empty subject")]
    EmptySubject,

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
