use gexp::expectation::EngineChoice;
use gexp::harness::{fit_rate, run_convergence, ExperimentConfig};
use gexp::PayoffSpec;

fn config(r: f64, big_r: f64, payoff: PayoffSpec, n_list: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        r_d: r,
        big_r_d: big_r,
        horizon: 1.0,
        payoff,
        n_list,
        engine: EngineChoice::Dp,
        pde: None,
        seed: 0,
        out: None,
    }
}

#[test]
fn call_convergence_run() {
    let c = config(0.5, 1.0, PayoffSpec::Call { strike: 0.0 }, vec![25, 50, 100, 200]);
    let rows = run_convergence(&c).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r.abs_gap.unwrap()).collect();
    assert!(gaps[3] < gaps[0]);
    assert!(gaps[3] < 0.02);
    let rate = fit_rate(&rows).unwrap();
    assert!(rate < 0.0, "gap should shrink, fitted exponent {rate}");
}

#[test]
fn convex_values_stay_below_the_continuous_value_plus_slack() {
    for payoff in [PayoffSpec::Square, PayoffSpec::Call { strike: 0.2 }, PayoffSpec::Put { strike: -0.1 }] {
        let c = config(0.25, 1.0, payoff, vec![3, 10, 30, 90]);
        for r in run_convergence(&c).unwrap() {
            let slack = 5e-3 + 2.0 * (1.0 / r.n as f64).sqrt();
            assert!(r.discrete_value.unwrap() <= r.pde_value.unwrap() + slack, "{payoff} {r:?}");
        }
    }
}

#[test]
fn rows_are_reproducible() {
    let c = config(0.25, 1.0, PayoffSpec::Butterfly { strike: 0.0, half_width: 0.5 }, vec![8, 16]);
    let a = run_convergence(&c).unwrap();
    let b = run_convergence(&c).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.discrete_value.map(f64::to_bits), y.discrete_value.map(f64::to_bits));
        assert_eq!(x.pde_value.map(f64::to_bits), y.pde_value.map(f64::to_bits));
    }
}
