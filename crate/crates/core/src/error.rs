use thiserror::Error;

/// Why a collection of ray filtrations admits no piecewise linear map on some cone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incompatibility {
    /// Index of the maximal cone where compatibility fails.
    pub cone: usize,
    pub kind: IncompatibilityKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IncompatibilityKind {
    /// The inclusion-exclusion multiplicities are inconsistent with the
    /// filtration dimensions. This is a certified rejection.
    DimensionWitness { tuple: Vec<i64>, detail: String },
    /// All randomized frame constructions failed verification. The data may
    /// still be incompatible, but no dimension witness was found.
    SearchExhausted { retries: usize },
}

impl std::fmt::Display for Incompatibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            IncompatibilityKind::DimensionWitness { tuple, detail } => write!(
                f,
                "cone {}: dimension consistency fails at tuple {:?}: {}",
                self.cone, tuple, detail
            ),
            IncompatibilityKind::SearchExhausted { retries } => write!(
                f,
                "cone {}: no adapted frame found after {} randomized retries",
                self.cone, retries
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),

    #[error("invalid fan: {0}")]
    InvalidFan(String),

    #[error("fan is not complete: {0}")]
    IncompleteFan(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("point lies outside the support of the fan")]
    OutsideSupport,

    #[error("invalid prevaluation: {0}")]
    InvalidPrevaluation(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("malformed piecewise linear map: {0}")]
    MalformedPlMap(String),

    #[error("incompatible filtrations: {0}")]
    Incompatible(Box<Incompatibility>),

    #[error("degenerate bilinear form")]
    DegenerateForm,

    #[error("not integral: {0}")]
    NotIntegral(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True when the error is a mathematical rejection of well-formed input,
    /// as opposed to an input or usage error.
    pub fn is_rejection(&self) -> bool {
        matches!(self, Error::Incompatible(_))
    }
}
