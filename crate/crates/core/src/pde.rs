//! Continuous-time reference values from the nonlinear backward heat
//! equation `-u_t - G(u_xx) = 0`, `u(T, .) = g`, solved with an explicit
//! monotone finite-difference scheme, plus closed forms.
//!
//! One backward step is `u + dt G(D2 u)`. Since `G` is the max of two linear
//! maps, this equals `max_c [(1 - c L) u_i + (c L / 2)(u_{i-1} + u_{i+1})]`
//! over `c in {r_D, R_D}` with `L = dt / dx^2`. Under the CFL bound every
//! coefficient is nonnegative, so each floating-point operation is monotone
//! and the comparison principle holds exactly, not just up to rounding.
//! Boundary nodes use `D2 u = 0` and stay frozen.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::VolatilityDomain;
use crate::error::{Error, Result};
use crate::payoff::{Payoff, PayoffKind, PayoffSpec};

pub const DEFAULT_INTERVALS: usize = 1200;
pub const DEFAULT_XMAX_MULT: f64 = 6.0;
/// `dt = DT_SAFETY * dx^2 / R_D`, below the CFL limit of 1/2.
pub const DT_SAFETY: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    /// Number of spatial intervals; the grid has `m + 1` nodes.
    pub m: usize,
    pub dt: f64,
    pub steps: usize,
}

impl PdeGrid {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.m as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// `R_D dt / dx^2`.
    pub fn cfl_ratio(&self, domain: &VolatilityDomain) -> f64 {
        domain.upper() * self.dt / self.dx().powi(2)
    }

    /// Symmetric grid `[-mult s, mult s]` with `s = sqrt(R_D T)`, `m`
    /// intervals and the largest time step allowed by [`DT_SAFETY`].
    pub fn symmetric(domain: &VolatilityDomain, m: usize, xmax_mult: f64) -> Result<Self> {
        if m < 2 || xmax_mult <= 0.0 || !xmax_mult.is_finite() {
            return Err(Error::DomainError(format!(
                "grid needs m >= 2 and a positive width multiplier, got m = {m}, mult = {xmax_mult}"
            )));
        }
        let horizon = domain.horizon();
        let scale = if domain.upper() > 0.0 {
            (domain.upper() * horizon).sqrt()
        } else {
            horizon.sqrt()
        };
        let x_max = xmax_mult * scale;
        let dx = 2.0 * x_max / m as f64;
        let steps = if domain.upper() > 0.0 {
            (horizon / (DT_SAFETY * dx * dx / domain.upper())).ceil().max(1.0) as usize
        } else {
            1
        };
        Ok(Self {
            x_min: -x_max,
            x_max,
            m,
            dt: horizon / steps as f64,
            steps,
        })
    }

    /// Default grid for a payoff with growth exponent `b`: six standard
    /// deviations, doubled when `b > 1`.
    pub fn default_for(domain: &VolatilityDomain, growth_exponent: f64) -> Result<Self> {
        let mult = if growth_exponent > 1.0 {
            2.0 * DEFAULT_XMAX_MULT
        } else {
            DEFAULT_XMAX_MULT
        };
        Self::symmetric(domain, DEFAULT_INTERVALS, mult)
    }

    fn validate(&self, domain: &VolatilityDomain) -> Result<()> {
        if !(self.x_min < 0.0 && 0.0 < self.x_max) {
            return Err(Error::DomainError(format!(
                "grid [{}, {}] must contain 0 in its interior",
                self.x_min, self.x_max
            )));
        }
        if self.m < 2 || self.steps == 0 || self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::DomainError("grid needs m >= 2, steps >= 1, dt > 0".into()));
        }
        let horizon = domain.horizon();
        if (self.steps as f64 * self.dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::DomainError(format!(
                "steps * dt = {} differs from T = {horizon}",
                self.steps as f64 * self.dt
            )));
        }
        let ratio = self.cfl_ratio(domain);
        if ratio > 0.5 * (1.0 + 1e-12) {
            return Err(Error::CflViolation { ratio });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    pub grid: PdeGrid,
    /// `u(0, x_i)` for `i = 0..=m`.
    pub u: Vec<f64>,
    pub value_at_origin: f64,
}

impl PdeSolution {
    /// Linear interpolation of `u(0, .)` at `x`, clamped to the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        let s = ((x - g.x_min) / g.dx()).clamp(0.0, g.m as f64);
        let i = (s.floor() as usize).min(g.m - 1);
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }
}

/// One backward time step from `u` (time `t`) into `out` (time `t - dt`).
pub fn backward_step(domain: &VolatilityDomain, grid: &PdeGrid, u: &[f64], out: &mut [f64]) {
    let lam = grid.dt / grid.dx().powi(2);
    let (a_lo, b_lo) = (1.0 - lam * domain.lower(), 0.5 * lam * domain.lower());
    let (a_hi, b_hi) = (1.0 - lam * domain.upper(), 0.5 * lam * domain.upper());
    let m = u.len() - 1;
    out[0] = u[0];
    out[m] = u[m];
    for i in 1..m {
        let nb = u[i - 1] + u[i + 1];
        let lo = a_lo * u[i] + b_lo * nb;
        let hi = a_hi * u[i] + b_hi * nb;
        out[i] = if hi > lo { hi } else { lo };
    }
}

/// Solves the G-heat equation backward from `u(T, .) = g` and returns
/// `u(0, .)`.
pub fn solve_g_heat(
    g: impl Fn(f64) -> f64,
    domain: &VolatilityDomain,
    grid: &PdeGrid,
) -> Result<PdeSolution> {
    grid.validate(domain)?;
    let mut u = Vec::with_capacity(grid.m + 1);
    for i in 0..=grid.m {
        let v = g(grid.x(i));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("terminal data {v} at x = {}", grid.x(i))));
        }
        u.push(v);
    }
    let mut next = vec![0.0; u.len()];
    for step in 0..grid.steps {
        backward_step(domain, grid, &u, &mut next);
        std::mem::swap(&mut u, &mut next);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("solution overflowed at step {step}")));
        }
    }
    let mut sol = PdeSolution {
        grid: *grid,
        u,
        value_at_origin: 0.0,
    };
    sol.value_at_origin = sol.value_at(0.0);
    Ok(sol)
}

/// PDE value of a terminal payoff on `grid` (or its default grid).
pub fn solve_payoff(
    payoff: &Payoff,
    domain: &VolatilityDomain,
    grid: Option<PdeGrid>,
) -> Result<PdeSolution> {
    let PayoffKind::Terminal(g) = payoff.kind() else {
        return Err(Error::Unsupported(format!(
            "the PDE oracle handles terminal payoffs only, not '{}'",
            payoff.name()
        )));
    };
    let grid = match grid {
        Some(grid) => grid,
        None => PdeGrid::default_for(domain, payoff.growth().b)?,
    };
    solve_g_heat(|x| g(x), domain, &grid)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `1 - Phi(x)`, accurate in the upper tail.
fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `E[(X - K)^+]` for `X ~ N(0, sigma^2 T)`.
pub fn bachelier_call(sigma: f64, horizon: f64, strike: f64) -> Result<f64> {
    if !(sigma > 0.0 && horizon > 0.0) {
        return Err(Error::DomainError(format!(
            "Bachelier price needs sigma > 0 and T > 0, got sigma = {sigma}, T = {horizon}"
        )));
    }
    let s = sigma * horizon.sqrt();
    let z = strike / s;
    Ok((s * normal_pdf(z) - strike * normal_sf(z)).max(0.0))
}

/// `E[(K - X)^+]`, by parity `put = call + K` for a centered `X`.
pub fn bachelier_put(sigma: f64, horizon: f64, strike: f64) -> Result<f64> {
    Ok(bachelier_call(sigma, horizon, strike)? + strike)
}

/// Closed-form continuous value for catalogue payoffs that have one.
///
/// Convex payoffs are priced at the top of `D`, concave ones at the bottom.
pub fn reference_value(spec: PayoffSpec, domain: &VolatilityDomain) -> Option<f64> {
    let (r, big_r, t) = (domain.lower(), domain.upper(), domain.horizon());
    match spec {
        PayoffSpec::Identity => Some(0.0),
        PayoffSpec::Square => Some(big_r * t),
        PayoffSpec::NegSquare => Some(-r * t),
        PayoffSpec::Call { strike } if big_r > 0.0 => bachelier_call(big_r.sqrt(), t, strike).ok(),
        PayoffSpec::Call { strike } => Some((-strike).max(0.0)),
        PayoffSpec::Put { strike } if big_r > 0.0 => bachelier_put(big_r.sqrt(), t, strike).ok(),
        PayoffSpec::Put { strike } => Some(strike.max(0.0)),
        PayoffSpec::Butterfly { .. } | PayoffSpec::Lookback => None,
    }
}
