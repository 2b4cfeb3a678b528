use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} lies outside {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("recurrence breakdown at degree {degree}: norm {norm} is not positive; reduce N")]
    RecurrenceBreakdown { degree: usize, norm: f64 },

    #[error("eigen-residual {residual:e} at degree {degree} exceeds {tolerance:e}")]
    EigenResidual {
        degree: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("truncation bound {bound:e} exceeds tolerance {tolerance:e} at t = {t}; increase N")]
    TruncationFloor { t: f64, bound: f64, tolerance: f64 },

    #[error("series tail not below {tolerance:e} after {terms} terms")]
    SeriesTail { terms: usize, tolerance: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("degenerate estimate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_unit(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            value,
            domain: "[0, 1]",
        })
    }
}
