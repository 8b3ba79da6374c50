use thiserror::Error;

/// Errors produced by model construction and the numeric operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must lie in [0, 1], got {value}")]
    ProbabilityRange { name: &'static str, value: f64 },

    #[error("learning rate {learn} exceeds change rate {change}; an agent cannot learn a mapping without changing it")]
    RateOrder { learn: f64, change: f64 },

    #[error("action count must be at least 2, got {0}")]
    ActionCount(usize),

    #[error("with 2 actions the change and learning rates must be equal (got c={change}, l={learn}): changing an incorrect binary mapping always lands on the correct action")]
    BinaryRates { change: f64, learn: f64 },

    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("impact matrix diagonal must be zero: entry [{index}][{index}] is {value}")]
    ImpactDiagonal { index: usize, value: f64 },

    #[error("identical-agents shortcut requires all agents to share rates, action counts, and a uniform off-diagonal impact")]
    NotIdentical,

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Validates that `value` is a probability, returning it unchanged.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::ProbabilityRange { name, value })
    }
}
