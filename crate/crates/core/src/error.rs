use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("scalar domain mismatch: {0} vs {1}")]
    DomainMismatch(String, String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular basis on leg {0}")]
    SingularBasis(usize),
    #[error("empty support")]
    EmptySupport,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("theorem inapplicable: {0}")]
    Inapplicable(String),
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

impl SpectralError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        SpectralError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SpectralError::InvalidParameter(msg.into())
    }
}
