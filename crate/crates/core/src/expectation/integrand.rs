//! Adapted volatility controls on the binary tree of coin tosses.
//!
//! A node of the tree is a sign prefix `(eps_1, .., eps_k)`. Nodes are
//! numbered heap-style: the root is 0 and the children of `id` are
//! `2 id + 1` (sign -1) and `2 id + 2` (sign +1). Depth `k` holds ids
//! `2^k - 1 ..= 2^(k+1) - 2`; the offset within the depth is the prefix id.
//! Since the path prefix is a function of the sign prefix, a table keyed by
//! sign prefixes covers every control adapted to the path.

use crate::domain::{SigmaSet, VolatilityDomain};
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Largest step count for which integrand tables and their laws are built.
pub const MAX_TABLE_STEPS: usize = 20;

pub(crate) fn check_table_budget(n: usize) -> Result<()> {
    if n > MAX_TABLE_STEPS {
        return Err(Error::BudgetExceeded {
            what: "binary tree nodes (2^n - 1)",
            required: 2f64.powi(n as i32) - 1.0,
            cap: 2f64.powi(MAX_TABLE_STEPS as i32) - 1.0,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn child(id: usize, up: bool) -> usize {
    2 * id + 1 + usize::from(up)
}

/// Depth and within-depth offset of a node id.
pub fn node_position(id: usize) -> (usize, usize) {
    let depth = (usize::BITS - (id + 1).leading_zeros() - 1) as usize;
    (depth, id + 1 - (1 << depth))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedIntegrand {
    lattice: Lattice,
    sigmas: SigmaSet,
    /// Level position in `sigmas` per node.
    choice: Vec<usize>,
}

impl AdaptedIntegrand {
    /// Builds an integrand from an explicit per-node table of level positions.
    pub fn from_table(
        domain: &VolatilityDomain,
        sigmas: SigmaSet,
        choice: Vec<usize>,
    ) -> Result<Self> {
        let n = sigmas.n();
        check_table_budget(n)?;
        let nodes = (1usize << n) - 1;
        if choice.len() != nodes {
            return Err(Error::PolicyError(format!(
                "integrand table has {} entries, expected {nodes}",
                choice.len()
            )));
        }
        if let Some(&bad) = choice.iter().find(|&&c| c >= sigmas.len()) {
            return Err(Error::PolicyError(format!(
                "level position {bad} outside a set of {} levels",
                sigmas.len()
            )));
        }
        Ok(Self {
            lattice: Lattice::new(domain, n)?,
            sigmas,
            choice,
        })
    }

    /// The same level at every node.
    pub fn constant(domain: &VolatilityDomain, sigmas: SigmaSet, level: usize) -> Result<Self> {
        check_table_budget(sigmas.n())?;
        let nodes = (1usize << sigmas.n()) - 1;
        Self::from_table(domain, sigmas, vec![level; nodes])
    }

    /// Builds the table by calling `rule(k, signs, path)` at every node, where
    /// `signs` are the `k` coin tosses so far and `path` the `k + 1` lattice
    /// indices they produced. `rule` returns a level position.
    pub fn from_rule<F>(domain: &VolatilityDomain, sigmas: SigmaSet, mut rule: F) -> Result<Self>
    where
        F: FnMut(usize, &[i8], &[i64]) -> usize,
    {
        let n = sigmas.n();
        check_table_budget(n)?;
        let mut choice = vec![0usize; (1usize << n) - 1];
        let mut signs = Vec::with_capacity(n);
        let mut path = Vec::with_capacity(n + 1);
        path.push(0i64);
        fill(&sigmas, &mut rule, 0, &mut signs, &mut path, &mut choice);
        Self::from_table(domain, sigmas, choice)
    }

    pub fn n(&self) -> usize {
        self.sigmas.n()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn sigmas(&self) -> &SigmaSet {
        &self.sigmas
    }

    pub fn table(&self) -> &[usize] {
        &self.choice
    }

    /// Level position chosen at node `id`.
    pub fn level_at(&self, id: usize) -> usize {
        self.choice[id]
    }

    /// Index displacement `k` of one step taken from node `id`.
    pub fn step_at(&self, id: usize) -> i64 {
        self.sigmas.numerators()[self.choice[id]] as i64
    }

    pub fn sigma_at(&self, id: usize) -> f64 {
        self.sigmas.sigma(self.choice[id])
    }

    /// Rows `(step, prefix_id, sigma)` in node order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.choice.len()).map(move |id| {
            let (depth, prefix) = node_position(id);
            (depth, prefix, self.sigma_at(id))
        })
    }

    /// CSV with header `step,prefix_id,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,prefix_id,sigma\n");
        for (step, prefix, sigma) in self.rows() {
            out.push_str(&format!("{step},{prefix},{sigma}\n"));
        }
        out
    }
}

fn fill<F>(
    sigmas: &SigmaSet,
    rule: &mut F,
    id: usize,
    signs: &mut Vec<i8>,
    path: &mut Vec<i64>,
    choice: &mut [usize],
) where
    F: FnMut(usize, &[i8], &[i64]) -> usize,
{
    if id >= choice.len() {
        return;
    }
    let level = rule(signs.len(), signs, path).min(sigmas.len() - 1);
    choice[id] = level;
    let step = sigmas.numerators()[level] as i64;
    let here = *path.last().expect("path prefix is nonempty");
    for up in [false, true] {
        signs.push(if up { 1 } else { -1 });
        path.push(if up { here + step } else { here - step });
        fill(sigmas, rule, child(id, up), signs, path, choice);
        path.pop();
        signs.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_numbering() {
        assert_eq!(node_position(0), (0, 0));
        assert_eq!(node_position(1), (1, 0));
        assert_eq!(node_position(2), (1, 1));
        assert_eq!(node_position(6), (2, 3));
        assert_eq!(node_position(7), (3, 0));
        assert_eq!(child(0, true), 2);
        assert_eq!(child(2, false), 5);
    }

    #[test]
    fn rule_sees_its_prefix() {
        let d = VolatilityDomain::new(0.25, 1.0, 1.0).unwrap();
        let s = d.admissible_sigmas(2).unwrap(); // {1/2, 1}
        // high volatility after an up move, low otherwise
        let f = AdaptedIntegrand::from_rule(&d, s, |k, signs, path| {
            assert_eq!(signs.len(), k);
            assert_eq!(path.len(), k + 1);
            usize::from(signs.last() == Some(&1))
        })
        .unwrap();
        assert_eq!(f.table(), &[0, 0, 1]);
        assert_eq!(f.sigma_at(2), 1.0);
        assert!(f.to_csv().starts_with("step,prefix_id,sigma\n0,0,0.5\n"));
    }

    #[test]
    fn table_validation() {
        let d = VolatilityDomain::new(0.25, 1.0, 1.0).unwrap();
        let s = d.admissible_sigmas(2).unwrap();
        assert!(AdaptedIntegrand::from_table(&d, s.clone(), vec![0, 0]).is_err());
        assert!(AdaptedIntegrand::from_table(&d, s, vec![0, 0, 2]).is_err());
        let big = d.admissible_sigmas(21).unwrap();
        assert!(matches!(
            AdaptedIntegrand::constant(&d, big, 0),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
