use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer overflow in exact matrix arithmetic")]
    Overflow,
    #[error("matrix is not unimodular (determinant {0})")]
    NonUnimodular(i128),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("enumeration budget exceeded: {predicted} candidates predicted, cap {cap}")]
    BudgetExceeded { predicted: u64, cap: u64 },
    #[error("orbit point does not match the requested action")]
    ActionMismatch,
    #[error("simple roots are linearly dependent")]
    SingularCartanMatrix,
    #[error("condition G does not hold for this group and representation")]
    ConditionGRequired,
    #[error("no maximal compact parametrization for {0}")]
    UnsupportedCompactGroup(String),
    #[error("point lies outside the positive Weyl chamber")]
    OutsideChamber,
    #[error("unipotent direction vanishes after translation")]
    DegenerateDirection,
    #[error("spiral profile is not monotone for c = {0}")]
    NonMonotoneProfile(f64),
    #[error("Y_max is not interior to the chamber")]
    NotInteriorPoint,
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("test function support leaves the density domain")]
    SupportEscapesDomain,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
