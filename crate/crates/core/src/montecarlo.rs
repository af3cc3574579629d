//! Strong-formulation sampling: a fair coin-toss walk whose step sizes are
//! set by a volatility policy.
//!
//! Signs come from ChaCha8 with the path index as the stream id, so path
//! `i` depends only on `(seed, i)` and is identical however paths are
//! scheduled or batched.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::SigmaSet;
use crate::error::{Error, Result};
use crate::expectation::integrand::child;
use crate::expectation::{AdaptedIntegrand, MarkovPolicy};
use crate::lattice::{Lattice, LatticePath};
use crate::payoff::Payoff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub const ALGORITHM: &'static str = "chacha8, one stream per path index";

    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn path_stream(&self, path_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path_index);
        rng
    }
}

/// Volatility control used while sampling.
#[derive(Debug, Clone)]
pub enum Policy {
    /// `sigma(k, x_k)` from the Markov DP.
    Markov(MarkovPolicy),
    /// One level at every step.
    Constant { sigmas: SigmaSet, level: usize },
    /// A table over sign prefixes.
    Adapted(AdaptedIntegrand),
}

impl Policy {
    /// Constant policy at volatility `sigma`, which must be one of the levels.
    pub fn constant(sigmas: SigmaSet, sigma: f64) -> Result<Self> {
        let level = sigmas.position_of(sigma).ok_or_else(|| {
            Error::PolicyError(format!(
                "sigma = {sigma} is not an admissible level at n = {} (levels {:?})",
                sigmas.n(),
                sigmas.levels()
            ))
        })?;
        Ok(Policy::Constant { sigmas, level })
    }

    pub fn n(&self) -> usize {
        match self {
            Policy::Markov(p) => p.n(),
            Policy::Constant { sigmas, .. } => sigmas.n(),
            Policy::Adapted(f) => f.n(),
        }
    }

    /// Index displacement at step `k` from index `j` and sign-tree node `node`.
    fn step(&self, k: usize, j: i64, node: usize) -> i64 {
        let (sigmas, level) = match self {
            Policy::Markov(p) => (
                p.sigmas(),
                p.level(k, j).expect("walk stays inside the policy's reachable set"),
            ),
            Policy::Constant { sigmas, level } => (sigmas, *level),
            Policy::Adapted(f) => (f.sigmas(), f.level_at(node)),
        };
        sigmas.numerators()[level] as i64
    }
}

/// Iterator over sampled lattice paths.
pub struct PathSampler<'a> {
    policy: &'a Policy,
    rng: RngSpec,
    next: u64,
    end: u64,
}

impl PathSampler<'_> {
    /// Path number `index` of the stream.
    pub fn path(&self, index: u64) -> LatticePath {
        sample_one(self.policy, self.rng, index)
    }
}

impl Iterator for PathSampler<'_> {
    type Item = LatticePath;

    fn next(&mut self) -> Option<LatticePath> {
        if self.next >= self.end {
            return None;
        }
        let p = self.path(self.next);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

fn sample_one(policy: &Policy, rng: RngSpec, index: u64) -> LatticePath {
    let n = policy.n();
    let mut stream = rng.path_stream(index);
    let mut indices = Vec::with_capacity(n + 1);
    let (mut j, mut node) = (0i64, 0usize);
    indices.push(j);
    let mut bits = 0u32;
    for k in 0..n {
        if k % 32 == 0 {
            bits = stream.next_u32();
        }
        let up = (bits >> (k % 32)) & 1 == 1;
        let s = policy.step(k, j, node);
        j += if up { s } else { -s };
        indices.push(j);
        if matches!(policy, Policy::Adapted(_)) && k + 1 < n {
            node = child(node, up);
        }
    }
    LatticePath::from_indices_unchecked(indices)
}

/// Stream of `n_paths` walks under `policy`.
pub fn sample_paths<'a>(
    policy: &'a Policy,
    lattice: &Lattice,
    n_paths: u64,
    rng: RngSpec,
) -> Result<PathSampler<'a>> {
    if policy.n() != lattice.n() {
        return Err(Error::PolicyError(format!(
            "policy built for n = {}, lattice has n = {}",
            policy.n(),
            lattice.n()
        )));
    }
    if let Policy::Constant { sigmas, level } = policy {
        if *level >= sigmas.len() {
            return Err(Error::PolicyError(format!("level position {level} out of range")));
        }
    }
    Ok(PathSampler {
        policy,
        rng,
        next: 0,
        end: n_paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_paths: u64,
    pub seed: u64,
}

/// Sample mean and standard error of the payoff over `n_paths` walks.
pub fn estimate(
    payoff: &Payoff,
    policy: &Policy,
    lattice: &Lattice,
    n_paths: u64,
    rng: RngSpec,
) -> Result<McEstimate> {
    if n_paths == 0 {
        return Err(Error::DomainError("need at least one path".into()));
    }
    let values = sample_paths(policy, lattice, n_paths, rng)?
        .map(|p| payoff.evaluate(lattice, &p))
        .collect::<Result<Vec<f64>>>()?;
    let count = values.len() as f64;
    let mean = pairwise_sum(&values) / count;
    let standard_error = if values.len() > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        (pairwise_sum(&sq) / (count - 1.0)).sqrt() / count.sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        standard_error,
        n_paths,
        seed: rng.seed,
    })
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// CSV rows `step,index,value` for each path in turn.
pub fn paths_to_csv<'a>(lattice: &Lattice, paths: impl IntoIterator<Item = &'a LatticePath>) -> String {
    let mut out = String::from("step,index,value\n");
    for path in paths {
        for (k, &j) in path.indices().iter().enumerate() {
            out.push_str(&format!("{k},{j},{}\n", lattice.value(j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::VolatilityDomain;
    use crate::payoff::PayoffSpec;

    fn setup(n: usize) -> (VolatilityDomain, Lattice, SigmaSet) {
        let d = VolatilityDomain::new(0.25, 1.0, 2.0).unwrap();
        let l = Lattice::new(&d, n).unwrap();
        let s = d.admissible_sigmas(n).unwrap();
        (d, l, s)
    }

    #[test]
    fn one_step_paths_are_reproducible() {
        let (_, l, s) = setup(1);
        let policy = Policy::constant(s, 1.0).unwrap();
        let a: Vec<_> = sample_paths(&policy, &l, 8, RngSpec::new(7)).unwrap().collect();
        let b: Vec<_> = sample_paths(&policy, &l, 8, RngSpec::new(7)).unwrap().collect();
        assert_eq!(a, b);
        for p in &a {
            let v = p.values(&l);
            assert_eq!(v[0], 0.0);
            assert!((v[1].abs() - 2f64.sqrt()).abs() < 1e-15);
        }
        // the stream has both signs somewhere
        assert!(a.iter().any(|p| p.terminal_index() > 0));
        assert!(a.iter().any(|p| p.terminal_index() < 0));
    }

    #[test]
    fn paths_are_on_lattice_and_admissible() {
        let (_, l, s) = setup(40);
        let policy = Policy::Constant { sigmas: s.clone(), level: 3 };
        for p in sample_paths(&policy, &l, 50, RngSpec::new(1)).unwrap() {
            assert!(LatticePath::new(&l, p.indices().to_vec()).is_ok());
            assert!(p.steps_admissible(&s));
        }
    }

    #[test]
    fn martingale_and_variance() {
        let (d, l, s) = setup(20);
        let sigma = s.sigma(4);
        let policy = Policy::Constant { sigmas: s, level: 4 };
        let rng = RngSpec::new(2024);
        let id = estimate(&PayoffSpec::Identity.to_payoff(), &policy, &l, 100_000, rng).unwrap();
        assert!(id.mean.abs() <= 4.0 * id.standard_error);
        let sq = estimate(&PayoffSpec::Square.to_payoff(), &policy, &l, 100_000, rng).unwrap();
        let target = sigma * sigma * d.horizon();
        assert!((sq.mean - target).abs() <= 4.0 * sq.standard_error);
    }

    #[test]
    fn policy_errors() {
        let (_, l, s) = setup(4);
        assert!(matches!(Policy::constant(s.clone(), 0.3), Err(Error::PolicyError(_))));
        let bad = Policy::Constant { sigmas: s.clone(), level: 10 };
        assert!(sample_paths(&bad, &l, 1, RngSpec::new(0)).is_err());
        let (_, l5, _) = setup(5);
        let p = Policy::constant(s, 1.0).unwrap();
        assert!(sample_paths(&p, &l5, 1, RngSpec::new(0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let (_, l, _) = setup(2);
        let p = LatticePath::new(&l, vec![0, 2, 0]).unwrap();
        let csv = paths_to_csv(&l, [&p]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,index,value");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,2,"));
    }
}
