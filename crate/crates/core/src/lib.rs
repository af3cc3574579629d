//! Discrete-time G-expectations under volatility uncertainty.
//!
//! The worst-case expectation `max_Q E^Q[xi]` is computed on a finite
//! lattice over all martingale laws whose increments have variance rate in
//! `D = [r_D, R_D]`, and compared with the continuous-time value given by
//! the nonlinear backward heat equation `-u_t - G(u_xx) = 0`.

pub mod domain;
pub mod error;
pub mod expectation;
pub mod harness;
pub mod lattice;
pub mod montecarlo;
pub mod payoff;
pub mod pde;

pub use domain::{admissible_sigmas, g_function, SigmaSet, VolatilityDomain};
pub use error::{Error, Result};
pub use expectation::{
    law_from_integrand, validate_law, value, value_enumerate, value_markov_dp, value_maxaug_dp,
    AdaptedIntegrand, Engine, EngineChoice, MarkovPolicy, MartingaleLaw, ValueReport,
};
pub use lattice::{interpolate, sup_norm, InterpolatedPath, Lattice, LatticePath};
pub use payoff::{evaluate_payoff, Growth, Payoff, PayoffKind, PayoffSpec};
