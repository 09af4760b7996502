use thiserror::Error;

/// Errors produced by the workbench.
///
/// Every fallible operation returns this type; the CLI maps the variants
/// onto process exit codes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("table of {requested} bytes exceeds memory cap of {cap} bytes")]
    MemoryCap { requested: u64, cap: u64 },

    #[error("{divisor} does not divide the group order {order}")]
    NotDivisor { divisor: u64, order: u64 },

    #[error("singular curve: 4a^3 + 27b^2 = 0 mod {0}")]
    SingularCurve(u64),

    #[error("point {0} is not on the curve")]
    OffCurve(String),

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("search budget of {0} nodes exhausted")]
    BudgetExhausted(u64),

    #[error("internal assertion failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
