use thiserror::Error;

/// Errors raised by the analytical engine, the simulator and parameter validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid interval: lo ({lo}) must be below hi ({hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("integrand returned non-finite value {value} at {at}")]
    NonFinite { at: f64, value: f64 },

    /// A probability fell outside its clamp window, usually because a
    /// quadrature order is too low for the requested operating point.
    #[error("numeric instability in {context}: value {value} outside [0, 1]")]
    NumericInstability { context: &'static str, value: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
