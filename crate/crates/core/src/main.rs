use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gexp::expectation::{self, EngineChoice};
use gexp::harness::{self, ExperimentConfig};
use gexp::montecarlo::{self, Policy, RngSpec};
use gexp::pde::{self, PdeGrid};
use gexp::{Error, Lattice, PayoffSpec, Result, VolatilityDomain};

#[derive(Parser)]
#[command(name = "gexp", version, about = "Discrete and continuous G-expectations under volatility uncertainty")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Lower variance bound r_D.
    #[arg(long = "r-d", global = true)]
    r_d: Option<f64>,
    /// Upper variance bound R_D.
    #[arg(long = "R-d", global = true)]
    big_r_d: Option<f64>,
    /// Horizon T.
    #[arg(long = "T", global = true)]
    horizon: Option<f64>,
    /// Payoff, e.g. square, neg-square, identity, call:K=0.0, put:K=0.1,
    /// butterfly:K=0.0,w=0.5, lookback.
    #[arg(long, global = true)]
    payoff: Option<PayoffSpec>,
}

impl Common {
    fn domain(&self) -> Result<VolatilityDomain> {
        VolatilityDomain::new(
            self.r_d.unwrap_or(0.25),
            self.big_r_d.unwrap_or(1.0),
            self.horizon.unwrap_or(1.0),
        )
    }

    fn payoff(&self) -> PayoffSpec {
        self.payoff.unwrap_or(PayoffSpec::Square)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Discrete G-expectation at one step count.
    Value {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "dp")]
        engine: EngineChoice,
    },
    /// Exhaustive search; prints the value and the argmax integrand as CSV.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Write the integrand CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Continuous value from the G-heat equation.
    Pde {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "xmax-mult")]
        xmax_mult: Option<f64>,
    },
    /// Monte Carlo estimate under a volatility policy.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// from-dp or const:SIGMA
        #[arg(long, default_value = "from-dp")]
        policy: String,
        /// Write the first --dump-count paths as step,index,value CSV.
        #[arg(long = "dump-paths")]
        dump_paths: Option<PathBuf>,
        #[arg(long = "dump-count", default_value_t = 10)]
        dump_count: u64,
    },
    /// Convergence table from a JSON experiment config.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Also write the rows as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))
}

fn run(cli: Cli, common: &Common) -> Result<ExitCode> {
    match cli.command {
        Command::Value { n, engine } => {
            let domain = common.domain()?;
            let payoff = common.payoff().to_payoff();
            let started = Instant::now();
            let report = expectation::value(&payoff, n, &domain, engine)?;
            println!(
                "{}",
                json!({
                    "n": n,
                    "value": report.value,
                    "engine": report.engine.to_string(),
                    "nodes": report.node_count,
                    "seconds": started.elapsed().as_secs_f64(),
                })
            );
        }
        Command::Enumerate { n, csv } => {
            let domain = common.domain()?;
            let payoff = common.payoff().to_payoff();
            let started = Instant::now();
            let report = expectation::value_enumerate(&payoff, n, &domain)?;
            println!(
                "{}",
                json!({
                    "n": n,
                    "value": report.value,
                    "engine": report.engine.to_string(),
                    "nodes": report.node_count,
                    "seconds": started.elapsed().as_secs_f64(),
                })
            );
            let table = report.integrand.expect("enumeration returns its argmax").to_csv();
            match csv {
                Some(path) => write_file(&path, &table)?,
                None => print!("{table}"),
            }
        }
        Command::Pde { m, xmax_mult } => {
            let domain = common.domain()?;
            let spec = common.payoff();
            let grid = match (m, xmax_mult) {
                (None, None) => PdeGrid::default_for(&domain, spec.growth_exponent())?,
                _ => {
                    let default = PdeGrid::default_for(&domain, spec.growth_exponent())?;
                    let default_mult = default.x_max / (domain.upper() * domain.horizon()).sqrt();
                    PdeGrid::symmetric(&domain, m.unwrap_or(default.m), xmax_mult.unwrap_or(default_mult))?
                }
            };
            let sol = pde::solve_payoff(&spec.to_payoff(), &domain, Some(grid))?;
            println!(
                "{}",
                json!({
                    "value": sol.value_at_origin,
                    "grid": {"m": grid.m, "dx": grid.dx(), "dt": grid.dt, "steps": grid.steps},
                })
            );
        }
        Command::Sample {
            n,
            paths,
            seed,
            policy,
            dump_paths,
            dump_count,
        } => {
            let domain = common.domain()?;
            let payoff = common.payoff().to_payoff();
            let lattice = Lattice::new(&domain, n)?;
            let policy = if policy == "from-dp" {
                let report = expectation::value_markov_dp(&payoff, n, &domain)?;
                Policy::Markov(report.policy.expect("Markov DP records its policy"))
            } else if let Some(sigma) = policy.strip_prefix("const:") {
                let sigma: f64 = sigma
                    .parse()
                    .map_err(|_| Error::PolicyError(format!("'{sigma}' is not a number")))?;
                Policy::constant(domain.admissible_sigmas(n)?, sigma)?
            } else {
                return Err(Error::PolicyError(format!(
                    "unknown policy '{policy}', expected from-dp or const:SIGMA"
                )));
            };
            let rng = RngSpec::new(seed);
            if let Some(path) = dump_paths {
                let sampled: Vec<_> =
                    montecarlo::sample_paths(&policy, &lattice, dump_count.min(paths), rng)?.collect();
                write_file(&path, &montecarlo::paths_to_csv(&lattice, &sampled))?;
            }
            let est = montecarlo::estimate(&payoff, &policy, &lattice, paths, rng)?;
            println!(
                "{}",
                json!({"mean": est.mean, "se": est.standard_error, "paths": est.n_paths, "seed": est.seed})
            );
        }
        Command::Converge { config, json } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(v) = common.r_d {
                cfg.r_d = v;
            }
            if let Some(v) = common.big_r_d {
                cfg.big_r_d = v;
            }
            if let Some(v) = common.horizon {
                cfg.horizon = v;
            }
            if let Some(v) = common.payoff {
                cfg.payoff = v;
            }
            let rows = harness::run_convergence(&cfg)?;
            let csv = harness::rows_to_csv(&rows);
            match &cfg.out {
                Some(path) => write_file(path, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(path) = json {
                write_file(&path, &harness::rows_to_json(&rows))?;
            }
            if let Ok(rate) = harness::fit_rate(&rows) {
                eprintln!("empirical gap exponent: {rate:.3}");
            }
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("n = {}: {}", r.n, r.error.as_deref().unwrap_or_default());
            }
            if harness::any_errors(&rows) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.common.clone();
    match run(cli, &common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
