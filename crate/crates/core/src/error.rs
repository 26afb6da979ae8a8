use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Every variant carries enough context to tell which parameter or which
/// numerical step gave up. Verification failures are not errors: they are
/// reported through `pass = false` in the relevant report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument {value} is outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("root bracket for {what} ran away past {limit:e}")]
    Overflow { what: &'static str, limit: f64 },

    #[error("{what} did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Tolerance { what: &'static str, tol: f64, estimate: f64 },

    #[error("point {re}{im:+}i lies on or too close to a pole")]
    Pole { re: f64, im: f64 },

    #[error("precision budget of {bits} bits exhausted in {what}")]
    Precision { what: &'static str, bits: usize },

    #[error("block with k = {k:e} has too many atoms to enumerate")]
    TooManyAtoms { k: f64 },

    #[error("energy grew by {growth:e} between t = {t0} and t = {t1}")]
    EnergyIncrease { t0: f64, t1: f64, growth: f64 },

    #[error("time grid is not strictly increasing at index {index}")]
    StepUnderflow { index: usize },

    #[error("spectral condition violated: {0}")]
    Spectrum(String),

    #[error("no admissible block size below {limit:e} for block {index}")]
    NoAdmissibleBlock { index: usize, limit: f64 },

    #[error("unknown {kind} `{name}`; known: {known}")]
    UnknownName { kind: &'static str, name: String, known: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}
