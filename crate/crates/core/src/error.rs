use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("MGF overflow: theta * duration = {exponent:.3} exceeds {limit}")]
    MgfOverflow { exponent: f64, limit: f64 },

    #[error("arrival rate {arrival_rate:.6} exceeds service rate {service_rate:.6}")]
    StabilityViolation { arrival_rate: f64, service_rate: f64 },

    #[error("queue overloaded: traffic intensity rho = {rho:.6} >= 1")]
    Overloaded { rho: f64 },

    #[error("no feasible theta on the search grid: arrival rate exceeds service rate everywhere")]
    Overload,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
