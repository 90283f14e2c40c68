use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// The reduction polynomial has a nontrivial factor over GF(2).
    #[error("polynomial {poly:#x} is reducible over GF(2): divisible by {factor:#x}")]
    ReduciblePolynomial { poly: u32, factor: u32 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("invalid parameters: {0}")]
    Parameter(String),

    /// Parameters fall outside every regime a construction exists for.
    #[error("unsupported regime: {0}")]
    Regime(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error("insufficient data: need {needed}, got {got}")]
    Insufficient { needed: usize, got: usize },

    #[error("shares are inconsistent with every codeword")]
    Inconsistent,

    #[error("matrix is singular")]
    Singular,

    #[error("repair failed: {0}")]
    Repair(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
