use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty reduction")]
    EmptyReduction,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("oracle too large: {paths} paths exceed the enumeration guard of {limit}")]
    OracleTooLarge { paths: u128, limit: u128 },
    #[error("vector has no finite coordinate")]
    NoFiniteCoordinate,
    #[error("step cap of {steps} exceeded; best certified bound {bound:e}")]
    StepCapExceeded { steps: usize, bound: f64 },
    #[error("quadrature did not converge: achieved error estimate {achieved:e}")]
    QuadratureFailure { achieved: f64 },
    #[error("power iteration did not converge after {iterations} iterations (gap {gap:e})")]
    PowerIteration { iterations: usize, gap: f64 },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("expected count {expected} in bin {bin} is below 5")]
    BinUnderflow { bin: usize, expected: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
