use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid volatility domain: {0}")]
    InvalidDomain(String),

    #[error("no admissible volatility level at n = {n}; smallest n with a nonempty set is {smallest_n}")]
    EmptySigmaSet { n: usize, smallest_n: usize },

    #[error("degenerate domain r_D = R_D = {variance} has no rational square root on any grid 1/n with n <= {searched}")]
    NotRepresentable { variance: f64, searched: usize },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("payoff evaluation failed: {0}")]
    PayoffError(String),

    #[error("budget exceeded: {what} needs {required}, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        required: f64,
        cap: f64,
    },

    #[error("engine does not support this payoff: {0}")]
    Unsupported(String),

    #[error("CFL condition violated: R_D * dt / dx^2 = {ratio} > 0.5")]
    CflViolation { ratio: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid policy: {0}")]
    PolicyError(String),

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
