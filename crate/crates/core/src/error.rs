use thiserror::Error;

/// Errors surfaced by the symbolic kernel.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("series must have zero constant term, found {0}")]
    NonzeroConstantTerm(String),
    #[error("q-Pochhammer parameters do not truncate: {0}")]
    NonTruncating(String),
    #[error("truncation depth exhausted: {0}")]
    DepthExhausted(String),
    #[error("operator is not monic of the expected order: {0}")]
    NotMonic(String),
    #[error("shape violation: {0}")]
    Shape(String),
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("missing substitution for field u{0}")]
    MissingAssignment(u8),
    #[error("series reparameterization needs an invertible first derivative")]
    NonInvertibleDerivative,
    #[error("mode window exceeded: {0}")]
    WindowExceeded(String),
    #[error("index out of range: {0}")]
    IndexRange(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("internal truncation bug: {0}")]
    InternalTruncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
