use thiserror::Error;

/// Failure modes of the protocol simulation.
///
/// `Display` of each variant starts with the stable kebab-case code returned by
/// [`Error::code`], which is what reports and the CLI surface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad-subsystem: {0}")]
    BadSubsystem(String),
    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bad-size: {0}")]
    BadSize(String),
    #[error("bad-dimension: {0}")]
    BadDimension(String),
    #[error("impossible-outcome: {0}")]
    ImpossibleOutcome(String),
    #[error("null-postselection: probability {0:e}")]
    NullPostselection(f64),
    #[error("unbiasedness-violation: {0}")]
    UnbiasednessViolation(String),
    #[error("layout-mismatch: {0}")]
    LayoutMismatch(String),
    #[error("non-factorable-postselection: {0}")]
    NonFactorablePostselection(String),
    #[error("invariant-violation: {0}")]
    Invariant(String),
    #[error("numerical-failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::BadSubsystem(_) => "bad-subsystem",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::BadSize(_) => "bad-size",
            Error::BadDimension(_) => "bad-dimension",
            Error::ImpossibleOutcome(_) => "impossible-outcome",
            Error::NullPostselection(_) => "null-postselection",
            Error::UnbiasednessViolation(_) => "unbiasedness-violation",
            Error::LayoutMismatch(_) => "layout-mismatch",
            Error::NonFactorablePostselection(_) => "non-factorable-postselection",
            Error::Invariant(_) => "invariant-violation",
            Error::Numerical(_) => "numerical-failure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
