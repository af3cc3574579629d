//! Finite martingale laws on the lattice and their validation.

use std::collections::BTreeMap;

use serde::Serialize;

use super::integrand::{check_table_budget, child, AdaptedIntegrand};
use crate::domain::VolatilityDomain;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePath};
use crate::payoff::Payoff;

/// Tolerance on total mass and on conditional means of increments.
pub const LAW_TOLERANCE: f64 = 1e-12;

/// A probability law with finite support on lattice paths.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleLaw {
    lattice: Lattice,
    support: Vec<(LatticePath, f64)>,
}

impl MartingaleLaw {
    /// Wraps an explicit support. Paths are merged and sorted; no martingale
    /// or volatility checks are made here (see [`validate_law`]).
    pub fn new(lattice: Lattice, support: Vec<(LatticePath, f64)>) -> Result<Self> {
        if let Some((p, _)) = support.iter().find(|(p, _)| p.steps() != lattice.n()) {
            return Err(Error::DomainError(format!(
                "support path has {} steps, lattice has {}",
                p.steps(),
                lattice.n()
            )));
        }
        let mut merged: BTreeMap<LatticePath, f64> = BTreeMap::new();
        for (path, p) in support {
            *merged.entry(path).or_insert(0.0) += p;
        }
        Ok(Self {
            lattice,
            support: merged.into_iter().collect(),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `(path, probability)` pairs, sorted by path.
    pub fn support(&self) -> &[(LatticePath, f64)] {
        &self.support
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// `E[xi(x_hat)]` under this law.
    pub fn expectation(&self, payoff: &Payoff) -> Result<f64> {
        let mut acc = 0.0;
        for (path, p) in &self.support {
            acc += p * payoff.evaluate(&self.lattice, path)?;
        }
        Ok(acc)
    }
}

/// Pushes the uniform coin-toss measure through the controlled walk: from
/// node `id` the index moves by `+-k` with `k/n = f(id)`, each with
/// conditional probability 1/2. Paths reached by several sign sequences are
/// merged on their exact indices.
pub fn law_from_integrand(f: &AdaptedIntegrand) -> Result<MartingaleLaw> {
    let n = f.n();
    check_table_budget(n)?;
    let mass = 0.5f64.powi(n as i32);
    let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let mut path = Vec::with_capacity(n + 1);
    path.push(0i64);
    walk(f, 0, &mut path, &mut |p| {
        *merged.entry(p.to_vec()).or_insert(0.0) += mass;
    });
    Ok(MartingaleLaw {
        lattice: *f.lattice(),
        support: merged
            .into_iter()
            .map(|(idx, p)| (LatticePath::from_indices_unchecked(idx), p))
            .collect(),
    })
}

fn walk(f: &AdaptedIntegrand, id: usize, path: &mut Vec<i64>, leaf: &mut impl FnMut(&[i64])) {
    if path.len() == f.n() + 1 {
        leaf(path);
        return;
    }
    let here = *path.last().expect("nonempty");
    let step = f.step_at(id);
    for up in [false, true] {
        path.push(if up { here + step } else { here - step });
        walk(f, child(id, up), path, leaf);
        path.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub passed: bool,
    /// Largest violation magnitude seen (0 when nothing was violated).
    pub worst: f64,
}

impl Check {
    fn new(passed: bool, worst: f64) -> Self {
        Self { passed, worst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Positive probabilities summing to one.
    pub normalization: Check,
    /// Zero conditional mean of every increment given its path prefix.
    pub martingale: Check,
    /// `r_D <= Delta^2 n / T <= R_D` for every realized increment.
    pub bounds: Check,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.normalization.passed && self.martingale.passed && self.bounds.passed
    }
}

/// Checks a law against the discrete martingale-law set for `domain`.
pub fn validate_law(law: &MartingaleLaw, domain: &VolatilityDomain) -> ValidationReport {
    let lattice = &law.lattice;
    let n = lattice.n();

    let mut nonpositive = 0.0f64;
    for (_, p) in &law.support {
        if *p <= 0.0 {
            nonpositive = nonpositive.max(p.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mass_err = (law.total_mass() - 1.0).abs();
    let normalization = Check::new(
        nonpositive == 0.0 && mass_err <= LAW_TOLERANCE,
        mass_err.max(nonpositive),
    );

    // support is sorted, so paths sharing a prefix are contiguous
    let mut worst_mean = 0.0f64;
    for k in 0..n {
        let mut start = 0;
        while start < law.support.len() {
            let prefix = &law.support[start].0.indices()[..=k];
            let mut end = start;
            let (mut mass, mut moment) = (0.0, 0.0);
            while end < law.support.len() && &law.support[end].0.indices()[..=k] == prefix {
                let (path, p) = &law.support[end];
                let idx = path.indices();
                mass += p;
                moment += p * (idx[k + 1] - idx[k]) as f64;
                end += 1;
            }
            if mass > 0.0 {
                worst_mean = worst_mean.max((moment / mass * lattice.spacing()).abs());
            }
            start = end;
        }
    }
    let martingale = Check::new(worst_mean <= LAW_TOLERANCE, worst_mean);

    // Delta^2 n / T = (d h)^2 n / T = d^2 / n^2 for an index increment d
    let mut worst_bound = 0.0f64;
    let mut bounds_ok = true;
    for (path, _) in &law.support {
        for w in path.indices().windows(2) {
            let d = (w[1] - w[0]).unsigned_abs();
            if !domain.admits(d, n as u64) {
                bounds_ok = false;
                let v = (d as f64 / n as f64).powi(2);
                let excess = (domain.lower() - v).max(v - domain.upper()).max(0.0);
                worst_bound = worst_bound.max(excess);
            }
        }
    }
    let bounds = Check::new(bounds_ok, worst_bound);

    ValidationReport {
        normalization,
        martingale,
        bounds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain() -> VolatilityDomain {
        VolatilityDomain::new(0.25, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_toss() {
        let d = domain();
        let s = d.admissible_sigmas(1).unwrap(); // {1}
        let law = law_from_integrand(&AdaptedIntegrand::constant(&d, s, 0).unwrap()).unwrap();
        let l = law.lattice();
        let support: Vec<_> = law.support().iter().map(|(p, q)| (p.values(l), *q)).collect();
        assert_eq!(support, vec![(vec![0.0, -1.0], 0.5), (vec![0.0, 1.0], 0.5)]);
    }

    #[test]
    fn two_step_variance() {
        // sum over the four sign paths: ((+-1 +-1) sigma / sqrt 2)^2 averages to sigma^2
        let d = domain();
        let s = d.admissible_sigmas(2).unwrap();
        for level in 0..s.len() {
            let sigma = s.sigma(level);
            let law = law_from_integrand(&AdaptedIntegrand::constant(&d, s.clone(), level).unwrap())
                .unwrap();
            let l = *law.lattice();
            let var: f64 = law
                .support()
                .iter()
                .map(|(p, q)| q * l.value(p.terminal_index()).powi(2))
                .sum();
            assert!((var - sigma * sigma).abs() < 1e-15);
        }
    }

    #[test]
    fn adapted_law_is_a_martingale() {
        let d = domain();
        let s = d.admissible_sigmas(2).unwrap();
        let f = AdaptedIntegrand::from_rule(&d, s, |_, signs, _| usize::from(signs == [1])).unwrap();
        let report = validate_law(&law_from_integrand(&f).unwrap(), &d);
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn drifted_law_fails_martingale_check() {
        let d = domain();
        let l = Lattice::new(&d, 2).unwrap();
        // sigma = 1/2 at n = 2 is one index per step; move +2 steps with probability 1
        let path = LatticePath::new(&l, vec![0, 2, 4]).unwrap();
        let law = MartingaleLaw::new(l, vec![(path, 1.0)]).unwrap();
        let report = validate_law(&law, &d);
        assert!(report.normalization.passed);
        assert!(!report.martingale.passed);
        assert!(report.martingale.worst > 0.5);
    }

    #[test]
    fn oversized_increment_fails_bounds_check() {
        let d = domain();
        let l = Lattice::new(&d, 2).unwrap();
        // 2 sqrt(R_D T / n) is 4 indices at n = 2
        let up = LatticePath::new(&l, vec![0, 4, 3]).unwrap();
        let down = LatticePath::new(&l, vec![0, -4, -3]).unwrap();
        let law = MartingaleLaw::new(l, vec![(up, 0.5), (down, 0.5)]).unwrap();
        let report = validate_law(&law, &d);
        assert!(!report.bounds.passed);
        assert!((report.bounds.worst - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bad_mass_fails_normalization() {
        let d = domain();
        let l = Lattice::new(&d, 1).unwrap();
        let up = LatticePath::new(&l, vec![0, 1]).unwrap();
        let down = LatticePath::new(&l, vec![0, -1]).unwrap();
        let law = MartingaleLaw::new(l, vec![(up, 0.5), (down, 0.4)]).unwrap();
        assert!(!validate_law(&law, &d).normalization.passed);
    }
}
