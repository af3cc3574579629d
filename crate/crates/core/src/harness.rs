//! Convergence experiments: discrete values for a list of step counts set
//! against the continuous reference, with CSV/JSON output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::VolatilityDomain;
use crate::error::{Error, Result};
use crate::expectation::{self, EngineChoice};
use crate::payoff::PayoffSpec;
use crate::pde::{self, PdeGrid, DEFAULT_INTERVALS, DEFAULT_XMAX_MULT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeOverrides {
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub xmax_mult: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub r_d: f64,
    #[serde(rename = "R_d")]
    pub big_r_d: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub payoff: PayoffSpec,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default)]
    pub pde: Option<PdeOverrides>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn domain(&self) -> Result<VolatilityDomain> {
        VolatilityDomain::new(self.r_d, self.big_r_d, self.horizon)
            .map_err(|e| Error::ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        if self.n_list.is_empty() {
            return Err(Error::ConfigError("n_list is empty".into()));
        }
        if self.n_list[0] == 0 {
            return Err(Error::ConfigError("step counts must be positive".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ConfigError("n_list must be strictly ascending".into()));
        }
        Ok(())
    }

    fn grid(&self, domain: &VolatilityDomain) -> Result<PdeGrid> {
        let ov = self.pde.unwrap_or(PdeOverrides {
            m: None,
            xmax_mult: None,
        });
        let default_mult = if self.payoff.growth_exponent() > 1.0 {
            2.0 * DEFAULT_XMAX_MULT
        } else {
            DEFAULT_XMAX_MULT
        };
        PdeGrid::symmetric(
            domain,
            ov.m.unwrap_or(DEFAULT_INTERVALS),
            ov.xmax_mult.unwrap_or(default_mult),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub discrete_value: Option<f64>,
    pub pde_value: Option<f64>,
    pub abs_gap: Option<f64>,
    pub sigma_levels: Option<usize>,
    /// Wall time of the discrete computation in seconds.
    pub seconds: f64,
    pub error: Option<String>,
}

/// Continuous reference: closed form where one exists, else the PDE.
pub fn reference(config: &ExperimentConfig, domain: &VolatilityDomain) -> Result<Option<f64>> {
    if let Some(v) = pde::reference_value(config.payoff, domain) {
        return Ok(Some(v));
    }
    let payoff = config.payoff.to_payoff();
    if !payoff.is_terminal() {
        return Ok(None);
    }
    let grid = config.grid(domain)?;
    Ok(Some(pde::solve_payoff(&payoff, domain, Some(grid))?.value_at_origin))
}

/// One row per step count, in ascending `n`. Engine failures are recorded
/// in the row and the run continues.
pub fn run_convergence(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let domain = config.domain()?;
    let payoff = config.payoff.to_payoff();
    let (reference, reference_error) = match reference(config, &domain) {
        Ok(v) => (v, None),
        Err(e) => (None, Some(format!("reference: {e}"))),
    };

    let rows = config
        .n_list
        .iter()
        .map(|&n| {
            let started = Instant::now();
            let result = expectation::value(&payoff, n, &domain, config.engine);
            let seconds = started.elapsed().as_secs_f64();
            let sigma_levels = domain.admissible_sigmas(n).ok().map(|s| s.len());
            match result {
                Ok(report) => ConvergenceRow {
                    n,
                    discrete_value: Some(report.value),
                    pde_value: reference,
                    abs_gap: reference.map(|r| (report.value - r).abs()),
                    sigma_levels,
                    seconds,
                    error: reference_error.clone(),
                },
                Err(e) => ConvergenceRow {
                    n,
                    discrete_value: None,
                    pde_value: reference,
                    abs_gap: None,
                    sigma_levels,
                    seconds,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// Least-squares slope of `log(abs_gap)` against `log(n)` over rows with a
/// positive gap.
pub fn fit_rate(rows: &[ConvergenceRow]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.abs_gap {
            Some(g) if g > 0.0 && g.is_finite() => Some(((r.n as f64).ln(), g.ln())),
            _ => None,
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs 3 rows with a positive gap, have {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all rows share one n".into()));
    }
    Ok(sxy / sxx)
}

/// Decimal rendering with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    // exponent after rounding, so 0.99999999999997 counts as magnitude 0
    let sci = format!("{x:.11e}");
    let magnitude: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_field(v: Option<f64>) -> String {
    v.map(format_sig12).unwrap_or_default()
}

pub const CSV_HEADER: &str = "n,discrete_value,pde_value,abs_gap,sigma_levels,seconds";

pub fn rows_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            opt_field(r.discrete_value),
            opt_field(r.pde_value),
            opt_field(r.abs_gap),
            r.sigma_levels.map(|s| s.to_string()).unwrap_or_default(),
            format_sig12(r.seconds),
        ));
    }
    out
}

pub fn rows_to_json(rows: &[ConvergenceRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn any_errors(rows: &[ConvergenceRow]) -> bool {
    rows.iter().any(|r| r.error.is_some())
}
