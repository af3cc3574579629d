//! Backward induction on the recombining lattice.
//!
//! For a terminal payoff the state at step `k` is the lattice index alone;
//! for running-max payoffs it is augmented with the running-max index.

use std::time::Instant;

use serde::Serialize;

use super::{Engine, ValueReport};
use crate::domain::{SigmaSet, VolatilityDomain};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::payoff::{check_finite, Payoff, PayoffKind};

/// Default cap on the number of augmented states held in one time layer.
pub const MAXAUG_STATE_CAP: usize = 20_000_000;

/// Optimal volatility per `(step, lattice index)` from the Markov DP.
///
/// Layer `k` covers indices `-k kmax ..= k kmax`, every index the walk can
/// reach in `k` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovPolicy {
    sigmas: SigmaSet,
    kmax: i64,
    layers: Vec<Vec<u16>>,
}

impl MarkovPolicy {
    pub fn n(&self) -> usize {
        self.layers.len()
    }

    pub fn sigmas(&self) -> &SigmaSet {
        &self.sigmas
    }

    /// Level position chosen at `(k, j)`, or `None` if unreachable.
    pub fn level(&self, k: usize, j: i64) -> Option<usize> {
        let span = k as i64 * self.kmax;
        if j.abs() > span {
            return None;
        }
        self.layers.get(k).map(|layer| layer[(j + span) as usize] as usize)
    }

    pub fn sigma(&self, k: usize, j: i64) -> Option<f64> {
        self.level(k, j).map(|i| self.sigmas.sigma(i))
    }

    /// Iterates `(k, j, level)` over every reachable node.
    pub fn entries(&self) -> impl Iterator<Item = (usize, i64, usize)> + '_ {
        self.layers.iter().enumerate().flat_map(move |(k, layer)| {
            let span = k as i64 * self.kmax;
            layer
                .iter()
                .enumerate()
                .map(move |(p, &l)| (k, p as i64 - span, l as usize))
        })
    }
}

/// Worst-case value of a terminal payoff with the full admissible level set.
pub fn value_markov_dp(payoff: &Payoff, n: usize, domain: &VolatilityDomain) -> Result<ValueReport> {
    let sigmas = domain.admissible_sigmas(n)?;
    markov_dp(payoff, &Lattice::new(domain, n)?, &sigmas, true)
}

/// Markov DP over an explicit level set. With `record_policy = false` only the
/// value is produced, which is noticeably faster for large `n`.
pub fn markov_dp(
    payoff: &Payoff,
    lattice: &Lattice,
    sigmas: &SigmaSet,
    record_policy: bool,
) -> Result<ValueReport> {
    let started = Instant::now();
    let PayoffKind::Terminal(g) = payoff.kind() else {
        return Err(Error::Unsupported(format!(
            "Markov DP needs a terminal payoff, '{}' is path-dependent",
            payoff.name()
        )));
    };
    let n = lattice.n();
    if sigmas.n() != n {
        return Err(Error::DomainError(format!(
            "level set built for n = {}, lattice has n = {n}",
            sigmas.n()
        )));
    }
    let kmax = sigmas.max_numerator() as i64;
    let ks: Vec<usize> = sigmas.numerators().iter().map(|&k| k as usize).collect();

    let span_n = n as i64 * kmax;
    let mut next = Vec::with_capacity((2 * span_n + 1) as usize);
    for j in -span_n..=span_n {
        next.push(check_finite(payoff.name(), g(lattice.value(j)))?);
    }
    let mut nodes = next.len() as u64;
    let mut layers: Vec<Vec<u16>> = Vec::new();
    let mut cur = Vec::with_capacity(next.len());
    let mut arg = Vec::new();

    // layer k has 2 k kmax + 1 nodes; its node p sits at p + kmax in layer k+1
    let off = kmax as usize;
    for k in (0..n).rev() {
        let len = 2 * k * off + 1;
        cur.clear();
        cur.resize(len, f64::NEG_INFINITY);
        if record_policy {
            // level positions held as f64 so the select runs at one lane width
            arg.clear();
            arg.resize(len, 0.0f64);
            for (level, &s) in ks.iter().enumerate() {
                let level = level as f64;
                let up = &next[off + s..off + s + len];
                let down = &next[off - s..off - s + len];
                for ((best, a), (&u, &d)) in cur.iter_mut().zip(arg.iter_mut()).zip(up.iter().zip(down)) {
                    let c = u + d;
                    let better = c > *best;
                    *best = if better { c } else { *best };
                    *a = if better { level } else { *a };
                }
            }
        } else {
            for &s in &ks {
                let up = &next[off + s..off + s + len];
                let down = &next[off - s..off - s + len];
                for ((best, &u), &d) in cur.iter_mut().zip(up).zip(down) {
                    let c = u + d;
                    *best = if c > *best { c } else { *best };
                }
            }
        }
        for v in cur.iter_mut() {
            *v *= 0.5;
        }
        if let Some(bad) = cur.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("DP value {bad} at step {k}")));
        }
        nodes += len as u64;
        if record_policy {
            layers.push(arg.iter().map(|&a| a as u16).collect());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    layers.reverse();

    Ok(ValueReport {
        n,
        value: next[0],
        policy: record_policy.then(|| MarkovPolicy {
            sigmas: sigmas.clone(),
            kmax,
            layers,
        }),
        integrand: None,
        engine: Engine::MarkovDp,
        node_count: nodes,
        wall_time: started.elapsed(),
    })
}

/// Worst-case value of a running-max payoff `g(x_T, max_t x_t)`.
pub fn value_maxaug_dp(payoff: &Payoff, n: usize, domain: &VolatilityDomain) -> Result<ValueReport> {
    let sigmas = domain.admissible_sigmas(n)?;
    maxaug_dp(payoff, &Lattice::new(domain, n)?, &sigmas, MAXAUG_STATE_CAP)
}

/// Augmented-state DP over an explicit level set. The state at step `k` is
/// `(j, m)` with `max(j, 0) <= m <= k kmax`; `state_cap` bounds the states of
/// the largest layer.
pub fn maxaug_dp(
    payoff: &Payoff,
    lattice: &Lattice,
    sigmas: &SigmaSet,
    state_cap: usize,
) -> Result<ValueReport> {
    let started = Instant::now();
    let g: Box<dyn Fn(f64, f64) -> f64 + '_> = match payoff.kind() {
        PayoffKind::RunningMax(g) => Box::new(|x, m| g(x, m)),
        PayoffKind::Terminal(g) => Box::new(|x, _| g(x)),
        PayoffKind::PathFunctional(_) => {
            return Err(Error::Unsupported(format!(
                "augmented DP cannot value the path functional '{}'",
                payoff.name()
            )))
        }
    };
    let n = lattice.n();
    if sigmas.n() != n {
        return Err(Error::DomainError(format!(
            "level set built for n = {}, lattice has n = {n}",
            sigmas.n()
        )));
    }
    let kmax = sigmas.max_numerator() as i64;
    let span_n = n as i64 * kmax;
    let layer_states = |span: i64| ((2 * span + 1) * (span + 1)) as usize;
    if layer_states(span_n) > state_cap {
        return Err(Error::BudgetExceeded {
            what: "augmented states in the terminal layer",
            required: layer_states(span_n) as f64,
            cap: state_cap as f64,
        });
    }
    let ks: Vec<i64> = sigmas.numerators().iter().map(|&k| k as i64).collect();

    // layout: (j + span) * (span + 1) + m; states with m < max(j, 0) are unused
    let mut next = vec![0.0; layer_states(span_n)];
    for j in -span_n..=span_n {
        for m in j.max(0)..=span_n {
            let v = g(lattice.value(j), lattice.value(m));
            next[((j + span_n) * (span_n + 1) + m) as usize] = check_finite(payoff.name(), v)?;
        }
    }
    let mut nodes = reachable(span_n);

    for k in (0..n).rev() {
        let span = k as i64 * kmax;
        let span_next = span + kmax;
        let width_next = span_next + 1;
        let at = |j: i64, m: i64| ((j + span_next) * width_next + m) as usize;
        let mut cur = vec![0.0; layer_states(span)];
        for j in -span..=span {
            for m in j.max(0)..=span {
                let mut best = f64::NEG_INFINITY;
                for &s in &ks {
                    let c = next[at(j + s, m.max(j + s))] + next[at(j - s, m)];
                    if c > best {
                        best = c;
                    }
                }
                let v = 0.5 * best;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("DP value {v} at step {k}")));
                }
                cur[((j + span) * (span + 1) + m) as usize] = v;
            }
        }
        nodes += reachable(span);
        next = cur;
    }

    Ok(ValueReport {
        n,
        value: next[0],
        policy: None,
        integrand: None,
        engine: Engine::MaxAugmentedDp,
        node_count: nodes,
        wall_time: started.elapsed(),
    })
}

/// Count of `(j, m)` pairs with `-span <= j <= span`, `max(j, 0) <= m <= span`.
fn reachable(span: i64) -> u64 {
    let s = span as u64;
    // j <= 0 contributes (s + 1) each; j > 0 contributes s - j + 1
    (s + 1) * (s + 1) + s * (s + 1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::{Growth, PayoffSpec};

    fn domain(r: f64, big_r: f64) -> VolatilityDomain {
        VolatilityDomain::new(r, big_r, 1.0).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        for n in [1, 3, 8] {
            let r = value_markov_dp(&PayoffSpec::Identity.to_payoff(), n, &domain(0.25, 1.0)).unwrap();
            // ties between levels pick up rounding of (j+s)h + (j-s)h
            assert!(r.value.abs() < 1e-15, "{}", r.value);
        }
    }

    #[test]
    fn square_attains_upper_variance() {
        for n in 1..=12 {
            let r = value_markov_dp(&PayoffSpec::Square.to_payoff(), n, &domain(0.25, 1.0)).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "n = {n}: {}", r.value);
        }
    }

    #[test]
    fn neg_square_attains_lower_variance() {
        for n in [4, 8, 12] {
            let r =
                value_markov_dp(&PayoffSpec::NegSquare.to_payoff(), n, &domain(0.25, 1.0)).unwrap();
            assert!((r.value + 0.25).abs() < 1e-12, "n = {n}: {}", r.value);
        }
    }

    #[test]
    fn policy_and_value_only_paths_agree() {
        let d = domain(0.25, 1.0);
        let l = Lattice::new(&d, 16).unwrap();
        let s = d.admissible_sigmas(16).unwrap();
        let p = PayoffSpec::Butterfly {
            strike: 0.1,
            half_width: 0.4,
        }
        .to_payoff();
        let a = markov_dp(&p, &l, &s, true).unwrap();
        let b = markov_dp(&p, &l, &s, false).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(b.policy.is_none());
        let policy = a.policy.unwrap();
        assert_eq!(policy.n(), 16);
        assert_eq!(policy.level(3, 3 * 16 + 1), None);
        assert!(policy.level(3, -3 * 16).is_some());
    }

    #[test]
    fn convex_and_concave_policies_are_extremal() {
        let d = domain(0.25, 1.0);
        let top = d.admissible_sigmas(6).unwrap().len() - 1;
        let sq = value_markov_dp(&PayoffSpec::Square.to_payoff(), 6, &d).unwrap();
        assert!(sq.policy.unwrap().entries().all(|(_, _, l)| l == top));
        let neg = value_markov_dp(&PayoffSpec::NegSquare.to_payoff(), 6, &d).unwrap();
        assert!(neg.policy.unwrap().entries().all(|(_, _, l)| l == 0));
    }

    #[test]
    fn lookback_single_step() {
        let d = domain(0.25, 1.0);
        let l = Lattice::new(&d, 1).unwrap();
        let s = SigmaSet::from_numerators(&d, 1, vec![1]).unwrap();
        let r = maxaug_dp(&PayoffSpec::Lookback.to_payoff(), &l, &s, MAXAUG_STATE_CAP).unwrap();
        assert_eq!(r.value, 0.5);
    }

    #[test]
    fn maxaug_reduces_to_markov_for_terminal_data() {
        let d = domain(0.25, 1.0);
        let terminal_x = Payoff::running_max("x", Growth::new(1.0, 1.0), |x, _| x);
        let r = value_maxaug_dp(&terminal_x, 5, &d).unwrap();
        assert!(r.value.abs() < 1e-15);
        let call = PayoffSpec::Call { strike: 0.05 }.to_payoff();
        let a = value_maxaug_dp(&call, 5, &d).unwrap().value;
        let b = value_markov_dp(&call, 5, &d).unwrap().value;
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn lookback_monotone_in_control_set() {
        let wide = value_maxaug_dp(&PayoffSpec::Lookback.to_payoff(), 6, &domain(0.25, 1.0)).unwrap();
        let narrow =
            value_maxaug_dp(&PayoffSpec::Lookback.to_payoff(), 6, &domain(0.25, 0.25)).unwrap();
        assert!(wide.value >= narrow.value);
    }

    #[test]
    fn maxaug_budget() {
        let d = domain(0.25, 1.0);
        let l = Lattice::new(&d, 8).unwrap();
        let s = d.admissible_sigmas(8).unwrap();
        assert!(matches!(
            maxaug_dp(&PayoffSpec::Lookback.to_payoff(), &l, &s, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn path_functionals_are_rejected() {
        let p = Payoff::path_functional("avg", Growth::new(1.0, 1.0), |w| w.vertex(1));
        let d = domain(0.25, 1.0);
        assert!(matches!(value_markov_dp(&p, 2, &d), Err(Error::Unsupported(_))));
        assert!(matches!(value_maxaug_dp(&p, 2, &d), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reachable_count() {
        // span 1: j = -1 -> m in {0,1}; j = 0 -> {0,1}; j = 1 -> {1}
        assert_eq!(reachable(1), 5);
        assert_eq!(reachable(0), 1);
    }
}
