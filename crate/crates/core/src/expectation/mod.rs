//! The discrete G-expectation `max_Q E^Q[xi(x_hat)]` over martingale laws
//! generated by adapted volatility controls.

pub mod dp;
pub mod enumerate;
pub mod integrand;
pub mod law;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use dp::{markov_dp, maxaug_dp, value_markov_dp, value_maxaug_dp, MarkovPolicy};
pub use enumerate::{enumerate_with, value_brute_force, value_enumerate};
pub use integrand::AdaptedIntegrand;
pub use law::{law_from_integrand, validate_law, Check, MartingaleLaw, ValidationReport};

use crate::domain::VolatilityDomain;
use crate::error::{Error, Result};
use crate::payoff::{Payoff, PayoffKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    MarkovDp,
    MaxAugmentedDp,
    Enumeration,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::MarkovDp => "markov-dp",
            Engine::MaxAugmentedDp => "max-augmented-dp",
            Engine::Enumeration => "enumeration",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ValueReport {
    pub n: usize,
    pub value: f64,
    /// Present for the Markov DP when requested.
    pub policy: Option<MarkovPolicy>,
    /// Argmax integrand, present for enumeration.
    pub integrand: Option<AdaptedIntegrand>,
    pub engine: Engine,
    /// DP states visited, or payoff evaluations for enumeration.
    pub node_count: u64,
    pub wall_time: Duration,
}

/// Engine family requested by a caller; `Dp` picks the DP matching the
/// payoff's structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    #[default]
    Dp,
    Enum,
}

impl FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" => Ok(EngineChoice::Dp),
            "enum" => Ok(EngineChoice::Enum),
            other => Err(Error::ConfigError(format!("unknown engine '{other}'"))),
        }
    }
}

/// Values `payoff` at step count `n` with the requested engine family.
pub fn value(
    payoff: &Payoff,
    n: usize,
    domain: &VolatilityDomain,
    engine: EngineChoice,
) -> Result<ValueReport> {
    match (engine, payoff.kind()) {
        (EngineChoice::Enum, _) => value_enumerate(payoff, n, domain),
        (EngineChoice::Dp, PayoffKind::Terminal(_)) => value_markov_dp(payoff, n, domain),
        (EngineChoice::Dp, PayoffKind::RunningMax(_)) => value_maxaug_dp(payoff, n, domain),
        (EngineChoice::Dp, PayoffKind::PathFunctional(_)) => Err(Error::Unsupported(format!(
            "'{}' is a generic path functional; only enumeration can value it",
            payoff.name()
        ))),
    }
}
