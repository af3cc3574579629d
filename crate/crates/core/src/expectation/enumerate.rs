//! Exhaustive maximization over adapted integrands.
//!
//! An integrand assigns one level to each node of the binary sign tree, so
//! the integrand space is a product over nodes. The two subtrees below a
//! node share no coordinates, which means the maximum over the product is
//! the nested maximum: at each node try every level, and below it maximize
//! each subtree independently given the path prefix built so far. The
//! payoff is evaluated on every full path reached this way, so nothing
//! about its structure (Markov, running max, ...) is assumed. Cost is
//! `(2 |levels|)^n` payoff evaluations.
//!
//! [`value_brute_force`] walks the product literally, one complete table at
//! a time, and is used to check the nested search at tiny `n`.

use std::time::Instant;

use super::integrand::{check_table_budget, child, AdaptedIntegrand};
use super::law::law_from_integrand;
use super::{Engine, ValueReport};
use crate::domain::{SigmaSet, VolatilityDomain};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePath};
use crate::payoff::Payoff;

/// Default cap on payoff evaluations, `(2 |levels|)^n`.
pub const ENUMERATION_CAP: f64 = 16_777_216.0;

/// Default cap on complete integrand tables visited by the brute force.
pub const BRUTE_FORCE_CAP: f64 = 2_000_000.0;

/// Maximum of `E[xi]` over all adapted integrands with the full level set.
pub fn value_enumerate(payoff: &Payoff, n: usize, domain: &VolatilityDomain) -> Result<ValueReport> {
    let sigmas = domain.admissible_sigmas(n)?;
    enumerate_with(payoff, domain, &sigmas, ENUMERATION_CAP)
}

/// Exhaustive search over an explicit level set. The report carries the
/// argmax integrand; ties go to the smallest level, decided top-down.
pub fn enumerate_with(
    payoff: &Payoff,
    domain: &VolatilityDomain,
    sigmas: &SigmaSet,
    cap: f64,
) -> Result<ValueReport> {
    let started = Instant::now();
    let n = sigmas.n();
    let evaluations = (2.0 * sigmas.len() as f64).powi(n as i32);
    if evaluations > cap {
        return Err(Error::BudgetExceeded {
            what: "payoff evaluations in exhaustive search",
            required: evaluations,
            cap,
        });
    }
    check_table_budget(n)?;
    let lattice = Lattice::new(domain, n)?;
    let mut search = Search {
        payoff,
        lattice: &lattice,
        ks: sigmas.numerators().iter().map(|&k| k as i64).collect(),
        evaluations: 0,
    };
    let mut choice = vec![0usize; (1usize << n) - 1];
    let mut path = Vec::with_capacity(n + 1);
    path.push(0i64);
    let value = search.fix_argmax(0, &mut path, &mut choice)?;
    let integrand = AdaptedIntegrand::from_table(domain, sigmas.clone(), choice)?;

    Ok(ValueReport {
        n,
        value,
        policy: None,
        integrand: Some(integrand),
        engine: Engine::Enumeration,
        node_count: search.evaluations,
        wall_time: started.elapsed(),
    })
}

struct Search<'a> {
    payoff: &'a Payoff,
    lattice: &'a Lattice,
    ks: Vec<i64>,
    evaluations: u64,
}

impl Search<'_> {
    fn n(&self) -> usize {
        self.lattice.n()
    }

    /// Best conditional expectation below the current prefix, and the level
    /// attaining it at this node.
    fn best(&mut self, path: &mut Vec<i64>) -> Result<(f64, usize)> {
        if path.len() == self.n() + 1 {
            self.evaluations += 1;
            let p = LatticePath::from_indices_unchecked(path.clone());
            return Ok((self.payoff.evaluate(self.lattice, &p)?, 0));
        }
        let here = *path.last().expect("nonempty");
        let mut best = (f64::NEG_INFINITY, 0);
        for level in 0..self.ks.len() {
            let s = self.ks[level];
            let mut total = 0.0;
            for j in [here - s, here + s] {
                path.push(j);
                total += self.best(path)?.0;
                path.pop();
            }
            if total > best.0 {
                best = (total, level);
            }
        }
        Ok((0.5 * best.0, best.1))
    }

    /// Records the argmax level at every node reached under the optimal
    /// choices above it; returns the value at `id`.
    fn fix_argmax(&mut self, id: usize, path: &mut Vec<i64>, choice: &mut [usize]) -> Result<f64> {
        let (value, level) = self.best(path)?;
        choice[id] = level;
        if path.len() < self.n() {
            let here = *path.last().expect("nonempty");
            let s = self.ks[level];
            for up in [false, true] {
                path.push(if up { here + s } else { here - s });
                self.fix_argmax(child(id, up), path, choice)?;
                path.pop();
            }
        }
        Ok(value)
    }
}

/// Literal enumeration: every table of levels over the `2^n - 1` nodes is
/// turned into its law and integrated against the payoff. The first table
/// (in lexicographic node order) attaining the maximum is returned.
pub fn value_brute_force(
    payoff: &Payoff,
    domain: &VolatilityDomain,
    sigmas: &SigmaSet,
    cap: f64,
) -> Result<(f64, AdaptedIntegrand)> {
    let n = sigmas.n();
    check_table_budget(n)?;
    let nodes = (1usize << n) - 1;
    let tables = (sigmas.len() as f64).powi(nodes as i32);
    if tables > cap {
        return Err(Error::BudgetExceeded {
            what: "integrand tables in brute-force enumeration",
            required: tables,
            cap,
        });
    }
    let mut table = vec![0usize; nodes];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let f = AdaptedIntegrand::from_table(domain, sigmas.clone(), table.clone())?;
        let v = law_from_integrand(&f)?.expectation(payoff)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, table.clone()));
        }
        // odometer, last node fastest
        let mut pos = nodes;
        loop {
            if pos == 0 {
                let (v, t) = best.expect("at least one table");
                return Ok((v, AdaptedIntegrand::from_table(domain, sigmas.clone(), t)?));
            }
            pos -= 1;
            table[pos] += 1;
            if table[pos] < sigmas.len() {
                break;
            }
            table[pos] = 0;
        }
    }
}
