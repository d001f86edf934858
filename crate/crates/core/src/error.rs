use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("non-positive weight {weight} at vertex {vertex}")]
    NonPositiveWeight { vertex: usize, weight: String },

    #[error("invalid inner product: {0}")]
    InvalidInnerProduct(String),

    #[error("forest is not properly decorated: {0}")]
    NotProperlyDecorated(String),

    #[error("locality violation: {0}")]
    LocalityViolation(String),

    #[error("basis index {0} is outside the active set of the inner product")]
    IndexOutOfRange(usize),

    #[error("Gram matrix restricted to the pole set is singular")]
    SingularGram,

    #[error("series variable sets differ")]
    VariableMismatch,

    #[error("series is not divisible by {0}")]
    NotDivisible(String),

    #[error("truncation degree {have} is below the required {need}")]
    TruncationTooLow { have: u32, need: u32 },

    #[error("renormalized value changed between truncation {low} and {high}")]
    TruncationInstability { low: u32, high: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    ConvergenceFailure(String),
}
