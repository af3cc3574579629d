//! The volatility uncertainty interval `D = [r_D, R_D]`, its sublinear
//! generator `G`, and the admissible volatility levels on the `1/n` grid.
//!
//! Volatility levels are order-one quantities `sigma = k/n` with
//! `r_D <= sigma^2 <= R_D`. A walk step at resolution `n` moves by
//! `sigma * sqrt(T/n)`, so the quadratic variation per unit time is
//! `sigma^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when testing `r_D <= (k/n)^2 <= R_D`.
///
/// Bounds arrive as decimal literals (`0.49`, `0.3`) that are not exact in
/// binary; without slack `k = 7, n = 10` would be rejected for `r_D = 0.49`.
const LEVEL_REL_TOL: f64 = 1e-12;

/// Largest denominator tried when looking for a rational square root of a
/// degenerate domain `r_D = R_D`.
const DEGENERATE_SEARCH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityDomain {
    r_d: f64,
    big_r_d: f64,
    horizon: f64,
}

impl VolatilityDomain {
    /// Builds `D = [r_d, big_r_d]` with horizon `T`.
    pub fn new(r_d: f64, big_r_d: f64, horizon: f64) -> Result<Self> {
        if !(r_d.is_finite() && big_r_d.is_finite() && horizon.is_finite()) {
            return Err(Error::InvalidDomain("parameters must be finite".into()));
        }
        if r_d < 0.0 {
            return Err(Error::InvalidDomain(format!("r_D = {r_d} is negative")));
        }
        if r_d > big_r_d {
            return Err(Error::InvalidDomain(format!(
                "r_D = {r_d} exceeds R_D = {big_r_d}"
            )));
        }
        if horizon <= 0.0 {
            return Err(Error::InvalidDomain(format!("T = {horizon} must be positive")));
        }
        Ok(Self {
            r_d,
            big_r_d,
            horizon,
        })
    }

    /// Lower variance bound `r_D`.
    pub fn lower(&self) -> f64 {
        self.r_d
    }

    /// Upper variance bound `R_D`.
    pub fn upper(&self) -> f64 {
        self.big_r_d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `G(gamma) = 1/2 sup_{c in D} c * gamma`.
    pub fn g(&self, gamma: f64) -> f64 {
        if gamma >= 0.0 {
            0.5 * self.big_r_d * gamma
        } else {
            0.5 * self.r_d * gamma
        }
    }

    /// Whether the variance `(k/n)^2` lies in `D`.
    pub fn admits(&self, k: u64, n: u64) -> bool {
        let v = (k as f64 / n as f64).powi(2);
        v >= self.r_d * (1.0 - LEVEL_REL_TOL) && v <= self.big_r_d * (1.0 + LEVEL_REL_TOL)
    }

    fn level_range(&self, n: usize) -> impl Iterator<Item = u64> + '_ {
        let nf = n as f64;
        let lo = (nf * self.r_d.sqrt()).floor().max(1.0) as u64 - 1;
        let hi = (nf * self.big_r_d.sqrt()).ceil() as u64 + 1;
        (lo..=hi).filter(move |&k| self.admits(k, n as u64))
    }

    /// All admissible levels `k/n`, ascending.
    pub fn admissible_sigmas(&self, n: usize) -> Result<SigmaSet> {
        if n == 0 {
            return Err(Error::DomainError("step count n must be at least 1".into()));
        }
        let ks: Vec<u64> = self.level_range(n).collect();
        if ks.is_empty() {
            return Err(self.empty_set_error(n));
        }
        Ok(SigmaSet { n, ks })
    }

    fn empty_set_error(&self, n: usize) -> Error {
        let search_to = if self.r_d < self.big_r_d {
            let gap = self.big_r_d.sqrt() - self.r_d.sqrt();
            // an interval of length >= 1/m always contains some k/m
            ((1.0 / gap).ceil() as usize).max(1)
        } else {
            DEGENERATE_SEARCH
        };
        match (1..=search_to).find(|&m| self.level_range(m).next().is_some()) {
            Some(smallest_n) => Error::EmptySigmaSet { n, smallest_n },
            None => Error::NotRepresentable {
                variance: self.r_d,
                searched: search_to,
            },
        }
    }
}

/// Free-function form of [`VolatilityDomain::g`].
pub fn g_function(domain: &VolatilityDomain, gamma: f64) -> f64 {
    domain.g(gamma)
}

/// Free-function form of [`VolatilityDomain::admissible_sigmas`].
pub fn admissible_sigmas(domain: &VolatilityDomain, n: usize) -> Result<SigmaSet> {
    domain.admissible_sigmas(n)
}

/// Admissible volatility levels `{k/n : r_D <= (k/n)^2 <= R_D}`.
///
/// Levels are held as their integer numerators `k`, which are also the
/// lattice-index displacement of one walk step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SigmaSet {
    n: usize,
    ks: Vec<u64>,
}

impl SigmaSet {
    /// Builds a set from explicit numerators. Used to restrict the control set
    /// (e.g. a singleton `{1}`) in tests and experiments.
    pub fn from_numerators(domain: &VolatilityDomain, n: usize, mut ks: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("step count n must be at least 1".into()));
        }
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() {
            return Err(domain.empty_set_error(n));
        }
        if let Some(&bad) = ks.iter().find(|&&k| !domain.admits(k, n as u64)) {
            return Err(Error::DomainError(format!(
                "level {bad}/{n} is outside [{}, {}]",
                domain.lower(),
                domain.upper()
            )));
        }
        Ok(Self { n, ks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Numerators `k`, ascending.
    pub fn numerators(&self) -> &[u64] {
        &self.ks
    }

    /// Volatility value of the `i`-th level.
    pub fn sigma(&self, i: usize) -> f64 {
        self.ks[i] as f64 / self.n as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.sigma(i)).collect()
    }

    pub fn max_numerator(&self) -> u64 {
        *self.ks.last().expect("sigma set is nonempty")
    }

    /// Position of the level whose value is `sigma`, if any.
    pub fn position_of(&self, sigma: f64) -> Option<usize> {
        let k = (sigma * self.n as f64).round();
        if k < 0.0 || (k / self.n as f64 - sigma).abs() > 1e-12 * sigma.abs().max(1.0) {
            return None;
        }
        self.ks.binary_search(&(k as u64)).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(r: f64, big_r: f64) -> VolatilityDomain {
        VolatilityDomain::new(r, big_r, 1.0).unwrap()
    }

    #[test]
    fn g_examples() {
        let d = dom(1.0, 4.0);
        assert_eq!(d.g(2.0), 4.0);
        assert_eq!(d.g(-2.0), -1.0);
        assert_eq!(d.g(0.0), 0.0);
        assert_eq!(g_function(&dom(0.3, 0.7), 0.0), 0.0);
    }

    #[test]
    fn sigma_set_examples() {
        let s = dom(0.25, 1.0).admissible_sigmas(4).unwrap();
        assert_eq!(s.levels(), vec![0.5, 0.75, 1.0]);

        let s = dom(1.0, 1.0).admissible_sigmas(3).unwrap();
        assert_eq!(s.levels(), vec![1.0]);

        let err = dom(0.3, 0.31).admissible_sigmas(2).unwrap_err();
        // 5/9 = 0.5556 and 0.5556^2 = 0.3086 is the first hit
        assert_eq!(err, Error::EmptySigmaSet { n: 2, smallest_n: 9 });
    }

    #[test]
    fn zero_variance_is_admissible_when_r_is_zero() {
        let s = dom(0.0, 1.0).admissible_sigmas(2).unwrap();
        assert_eq!(s.numerators(), &[0, 1, 2]);
    }

    #[test]
    fn decimal_bounds_are_not_lost_to_rounding() {
        let s = dom(0.49, 0.81).admissible_sigmas(10).unwrap();
        assert_eq!(s.numerators(), &[7, 8, 9]);
    }

    #[test]
    fn degenerate_domains() {
        let d = dom(0.25, 0.25);
        assert_eq!(
            d.admissible_sigmas(3).unwrap_err(),
            Error::EmptySigmaSet { n: 3, smallest_n: 2 }
        );
        assert_eq!(d.admissible_sigmas(6).unwrap().levels(), vec![0.5]);
        assert!(matches!(
            dom(2.0, 2.0).admissible_sigmas(5),
            Err(Error::NotRepresentable { .. })
        ));
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(VolatilityDomain::new(-0.1, 1.0, 1.0).is_err());
        assert!(VolatilityDomain::new(2.0, 1.0, 1.0).is_err());
        assert!(VolatilityDomain::new(0.0, 1.0, 0.0).is_err());
        assert!(VolatilityDomain::new(0.0, f64::INFINITY, 1.0).is_err());
        assert!(dom(0.0, 1.0).admissible_sigmas(0).is_err());
    }

    #[test]
    fn position_lookup() {
        let s = dom(0.25, 1.0).admissible_sigmas(4).unwrap();
        assert_eq!(s.position_of(0.75), Some(1));
        assert_eq!(s.position_of(0.6), None);
        assert_eq!(s.position_of(0.25), None);
    }
}
