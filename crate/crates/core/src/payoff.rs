//! Payoff functionals evaluated on interpolated lattice paths, plus the
//! built-in catalogue used by the CLI and the experiment harness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{InterpolatedPath, Lattice, LatticePath};

pub type TerminalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type RunningMaxFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PathFn = Arc<dyn Fn(&InterpolatedPath<'_>) -> f64 + Send + Sync>;

/// Structure of a payoff, which decides which engines can value it.
#[derive(Clone)]
pub enum PayoffKind {
    /// `g(x_T)`.
    Terminal(TerminalFn),
    /// `g(x_T, max_t x_t)`; the running max includes `x_0 = 0`.
    RunningMax(RunningMaxFn),
    /// Arbitrary functional of the continuous interpolated path.
    PathFunctional(PathFn),
}

/// Polynomial growth bound `|xi(w)| <= a (1 + ||w||_inf)^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub a: f64,
    pub b: f64,
}

impl Growth {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn bound(&self, sup_norm: f64) -> f64 {
        self.a * (1.0 + sup_norm).powf(self.b)
    }
}

#[derive(Clone)]
pub struct Payoff {
    name: String,
    kind: PayoffKind,
    growth: Growth,
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PayoffKind::Terminal(_) => "Terminal",
            PayoffKind::RunningMax(_) => "RunningMax",
            PayoffKind::PathFunctional(_) => "PathFunctional",
        };
        f.debug_struct("Payoff")
            .field("name", &self.name)
            .field("kind", &kind)
            .field("growth", &self.growth)
            .finish()
    }
}

impl Payoff {
    pub fn terminal(
        name: impl Into<String>,
        growth: Growth,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: PayoffKind::Terminal(Arc::new(g)),
            growth,
        }
    }

    pub fn running_max(
        name: impl Into<String>,
        growth: Growth,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: PayoffKind::RunningMax(Arc::new(g)),
            growth,
        }
    }

    pub fn path_functional(
        name: impl Into<String>,
        growth: Growth,
        xi: impl Fn(&InterpolatedPath<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind: PayoffKind::PathFunctional(Arc::new(xi)),
            growth,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, PayoffKind::Terminal(_))
    }

    /// Evaluates the payoff on the interpolation of `path`.
    pub fn evaluate(&self, lattice: &Lattice, path: &LatticePath) -> Result<f64> {
        let v = match &self.kind {
            PayoffKind::Terminal(g) => g(lattice.value(path.terminal_index())),
            PayoffKind::RunningMax(g) => g(
                lattice.value(path.terminal_index()),
                lattice.value(path.max_index()),
            ),
            PayoffKind::PathFunctional(xi) => xi(&InterpolatedPath::new(lattice, path)),
        };
        check_finite(&self.name, v)
    }
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PayoffError(format!("payoff '{name}' returned {v}")))
    }
}

/// Free-function form of [`Payoff::evaluate`].
pub fn evaluate_payoff(payoff: &Payoff, lattice: &Lattice, path: &LatticePath) -> Result<f64> {
    payoff.evaluate(lattice, path)
}

/// Named payoffs selectable from the command line and config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PayoffSpec {
    Identity,
    Square,
    NegSquare,
    Call { strike: f64 },
    Put { strike: f64 },
    Butterfly { strike: f64, half_width: f64 },
    Lookback,
}

impl PayoffSpec {
    /// Every catalogue shape, with representative parameters.
    pub fn catalogue() -> Vec<PayoffSpec> {
        vec![
            PayoffSpec::Identity,
            PayoffSpec::Square,
            PayoffSpec::NegSquare,
            PayoffSpec::Call { strike: 0.0 },
            PayoffSpec::Put { strike: 0.1 },
            PayoffSpec::Butterfly {
                strike: 0.0,
                half_width: 0.5,
            },
            PayoffSpec::Lookback,
        ]
    }

    pub fn to_payoff(self) -> Payoff {
        let name = self.to_string();
        match self {
            PayoffSpec::Identity => Payoff::terminal(name, Growth::new(1.0, 1.0), |x| x),
            PayoffSpec::Square => Payoff::terminal(name, Growth::new(1.0, 2.0), |x| x * x),
            PayoffSpec::NegSquare => Payoff::terminal(name, Growth::new(1.0, 2.0), |x| -x * x),
            PayoffSpec::Call { strike } => Payoff::terminal(
                name,
                Growth::new(strike.abs().max(1.0), 1.0),
                move |x| (x - strike).max(0.0),
            ),
            PayoffSpec::Put { strike } => Payoff::terminal(
                name,
                Growth::new(strike.abs().max(1.0), 1.0),
                move |x| (strike - x).max(0.0),
            ),
            PayoffSpec::Butterfly { strike, half_width } => {
                Payoff::terminal(name, Growth::new(half_width, 1.0), move |x| {
                    butterfly(x, strike, half_width)
                })
            }
            PayoffSpec::Lookback => Payoff::running_max(name, Growth::new(1.0, 1.0), |_, m| m),
        }
    }

    /// Polynomial growth exponent of the catalogue payoff.
    pub fn growth_exponent(self) -> f64 {
        self.to_payoff().growth().b
    }
}

/// Long calls at `K - w` and `K + w`, two short calls at `K`; written as the
/// tent `max(w - |x - K|, 0)` so the wings are exactly zero.
fn butterfly(x: f64, strike: f64, half_width: f64) -> f64 {
    (half_width - (x - strike).abs()).max(0.0)
}

impl fmt::Display for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffSpec::Identity => write!(f, "identity"),
            PayoffSpec::Square => write!(f, "square"),
            PayoffSpec::NegSquare => write!(f, "neg-square"),
            PayoffSpec::Call { strike } => write!(f, "call:K={strike}"),
            PayoffSpec::Put { strike } => write!(f, "put:K={strike}"),
            PayoffSpec::Butterfly { strike, half_width } => {
                write!(f, "butterfly:K={strike},w={half_width}")
            }
            PayoffSpec::Lookback => write!(f, "lookback"),
        }
    }
}

fn parse_params(name: &str, params: &str, allowed: &[&str]) -> Result<Vec<(String, f64)>> {
    if params.is_empty() {
        return Ok(Vec::new());
    }
    params
        .split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::ConfigError(format!("payoff '{name}': expected key=value, got '{kv}'"))
            })?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(Error::ConfigError(format!(
                    "payoff '{name}' has no parameter '{k}'"
                )));
            }
            let v: f64 = v.trim().parse().map_err(|_| {
                Error::ConfigError(format!("payoff '{name}': '{v}' is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::ConfigError(format!("payoff '{name}': '{k}' must be finite")));
            }
            Ok((k.to_string(), v))
        })
        .collect()
}

fn param(params: &[(String, f64)], key: &str, default: f64) -> f64 {
    params
        .iter()
        .rev()
        .find(|(k, _)| k == key)
        .map_or(default, |(_, v)| *v)
}

impl FromStr for PayoffSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let spec = match name {
            "identity" => {
                parse_params(name, params, &[])?;
                PayoffSpec::Identity
            }
            "square" => {
                parse_params(name, params, &[])?;
                PayoffSpec::Square
            }
            "neg-square" => {
                parse_params(name, params, &[])?;
                PayoffSpec::NegSquare
            }
            "lookback" => {
                parse_params(name, params, &[])?;
                PayoffSpec::Lookback
            }
            "call" => PayoffSpec::Call {
                strike: param(&parse_params(name, params, &["K"])?, "K", 0.0),
            },
            "put" => PayoffSpec::Put {
                strike: param(&parse_params(name, params, &["K"])?, "K", 0.0),
            },
            "butterfly" => {
                let p = parse_params(name, params, &["K", "w"])?;
                let half_width = param(&p, "w", 0.5);
                if half_width <= 0.0 {
                    return Err(Error::ConfigError("butterfly width w must be positive".into()));
                }
                PayoffSpec::Butterfly {
                    strike: param(&p, "K", 0.0),
                    half_width,
                }
            }
            other => return Err(Error::ConfigError(format!("unknown payoff '{other}'"))),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for PayoffSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PayoffSpec> for String {
    fn from(spec: PayoffSpec) -> String {
        spec.to_string()
    }
}
