use gexp::expectation::value_markov_dp;
use gexp::montecarlo::{estimate, sample_paths, Policy, RngSpec};
use gexp::{AdaptedIntegrand, Lattice, PayoffSpec, VolatilityDomain};

#[test]
fn fixed_policies_do_not_beat_the_dp_value() {
    let d = VolatilityDomain::new(0.25, 1.0, 1.0).unwrap();
    let n = 40;
    let l = Lattice::new(&d, n).unwrap();
    let s = d.admissible_sigmas(n).unwrap();
    let p = PayoffSpec::Butterfly {
        strike: 0.0,
        half_width: 0.5,
    }
    .to_payoff();
    let dp = value_markov_dp(&p, n, &d).unwrap().value;
    for level in [0, s.len() / 2, s.len() - 1] {
        let policy = Policy::Constant {
            sigmas: s.clone(),
            level,
        };
        let est = estimate(&p, &policy, &l, 20_000, RngSpec::new(level as u64)).unwrap();
        assert!(est.mean <= dp + 4.0 * est.standard_error, "level {level}: {est:?} vs {dp}");
    }
}

#[test]
fn optimal_policy_attains_the_dp_value() {
    let d = VolatilityDomain::new(0.25, 1.0, 1.0).unwrap();
    let n = 30;
    let l = Lattice::new(&d, n).unwrap();
    let p = PayoffSpec::Butterfly {
        strike: 0.1,
        half_width: 0.4,
    }
    .to_payoff();
    let report = value_markov_dp(&p, n, &d).unwrap();
    let policy = Policy::Markov(report.policy.unwrap());
    let est = estimate(&p, &policy, &l, 50_000, RngSpec::new(99)).unwrap();
    assert!((est.mean - report.value).abs() <= 4.0 * est.standard_error);
}

#[test]
fn adapted_integrand_policy_follows_its_table() {
    let d = VolatilityDomain::new(0.25, 1.0, 1.0).unwrap();
    let s = d.admissible_sigmas(4).unwrap(); // numerators 2, 3, 4
    // low volatility on the first step, high after an up move, middle after a down move
    let f = AdaptedIntegrand::from_rule(&d, s, |k, signs, _| match (k, signs.first()) {
        (0, _) => 0,
        (_, Some(1)) => 2,
        _ => 1,
    })
    .unwrap();
    let l = *f.lattice();
    let policy = Policy::Adapted(f);
    for path in sample_paths(&policy, &l, 200, RngSpec::new(5)).unwrap() {
        let idx = path.indices();
        assert_eq!(idx[1].abs(), 2);
        let later = if idx[1] > 0 { 4 } else { 3 };
        for w in idx[1..].windows(2) {
            assert_eq!((w[1] - w[0]).abs(), later);
        }
    }
}
