//! Self-checks run by the `verify` subcommand: prox inequalities, the PG guarantee,
//! termination-law sampling, batch-size formulas, smoothing, constraint maintenance
//! and thread-count reproducibility.

use rand::Rng;
use rspg_core::geometry::{FeasibleSet, Geometry, ProxSetup, SimpleTerm};
use rspg_core::linalg;
use rspg_core::oracles::smoothed_value_mc;
use rspg_core::problems::{gen_s3vm, QuadraticModel, S3vmSpec};
use rspg_core::solvers::{
    pg_solve, rspg_batch_size, rspg_solve, termination_law, two_phase_rspg_v, SolverConfig,
    StepsizePolicy,
};
use rspg_core::Stream;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::config::ExperimentConfig;
use crate::experiment::{run_experiment, with_threads, RunOptions};

const TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failure: Option<String>, detail: String) -> Self {
        match failure {
            Some(f) => CheckOutcome {
                name,
                passed: false,
                detail: f,
            },
            None => CheckOutcome {
                name,
                passed: true,
                detail,
            },
        }
    }
}

fn setups(n: usize) -> Vec<ProxSetup> {
    vec![
        ProxSetup::new(Geometry::Euclidean, FeasibleSet::AllSpace, SimpleTerm::Zero),
        ProxSetup::new(
            Geometry::Euclidean,
            FeasibleSet::AllSpace,
            SimpleTerm::L1 { weight: 0.3 },
        ),
        ProxSetup::new(
            Geometry::Euclidean,
            FeasibleSet::unit_box(n, -1.0, 1.0),
            SimpleTerm::Zero,
        ),
        ProxSetup::new(
            Geometry::Euclidean,
            FeasibleSet::unit_box(n, -1.0, 1.0),
            SimpleTerm::L1 { weight: 0.2 },
        ),
        ProxSetup::new(
            Geometry::EntropySimplex,
            FeasibleSet::Simplex,
            SimpleTerm::Zero,
        ),
    ]
}

fn random_point(setup: &ProxSetup, n: usize, s: &mut Stream) -> Vec<f64> {
    match setup.set {
        FeasibleSet::Simplex => {
            let w: Vec<f64> = (0..n).map(|_| s.random::<f64>() + 0.01).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|v| v / t).collect()
        }
        _ => {
            let raw: Vec<f64> = (0..n).map(|_| s.random_range(-2.0..2.0)).collect();
            setup
                .set
                .project(&raw)
                .expect("projection of a finite point")
        }
    }
}

/// `<g, P> >= alpha |P|^2 + (h(x+) - h(x)) / gamma` and
/// `|P(g1) - P(g2)| <= |g1 - g2|_* / alpha` on random instances of each geometry.
pub fn prox_inequalities(instances: usize, stream: &Stream) -> CheckOutcome {
    let n = 4;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut failure = None;
    for (k, setup) in setups(n).iter().enumerate() {
        for i in 0..instances {
            let mut s = stream.fork_path(&[k as u64, i as u64]);
            let x = random_point(setup, n, &mut s);
            let g1: Vec<f64> = (0..n).map(|_| s.random_range(-3.0..3.0)).collect();
            let g2: Vec<f64> = (0..n).map(|_| s.random_range(-3.0..3.0)).collect();
            let gamma = s.random_range(0.05..2.0);
            let (p1, p2) = match (
                setup.prox_step(&x, &g1, gamma),
                setup.prox_step(&x, &g2, gamma),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(format!("{}: prox failed: {e}", setup.geometry.name()));
                    break;
                }
            };
            let alpha = setup.modulus();
            let norm = setup.geometry.norm(&p1.mapping);
            let lhs = linalg::dot(&g1, &p1.mapping);
            let rhs =
                alpha * norm * norm + (setup.term.value(&p1.x_plus) - setup.term.value(&x)) / gamma;
            let diff: Vec<f64> = p1
                .mapping
                .iter()
                .zip(&p2.mapping)
                .map(|(a, b)| a - b)
                .collect();
            let gdiff: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
            let lip = setup.geometry.norm(&diff) - setup.geometry.dual_norm(&gdiff) / alpha;
            let violation = (rhs - lhs).max(lip);
            worst = worst.max(violation);
            if violation > TOL {
                failure = Some(format!(
                    "{} / {} / {}: violation {violation:e}",
                    setup.geometry.name(),
                    setup.set.name(),
                    setup.term.name()
                ));
                break;
            }
        }
        if failure.is_some() {
            break;
        }
    }
    CheckOutcome::new(
        "prox inequalities",
        failure,
        format!(
            "{} setups x {instances} instances, worst slack {worst:e}",
            setups(n).len()
        ),
    )
}

/// PG on a convex quadratic stays within `2 L^2 D^2 / (alpha^2 N)` for `N = 1..100`.
pub fn pg_guarantee() -> CheckOutcome {
    let curvature = vec![2.0, 1.0, 0.5, 0.25];
    let center = vec![1.0, -1.0, 0.5, 0.0];
    let l = 2.0;
    let model = QuadraticModel::new(curvature, center, 0.0).expect("valid quadratic");
    let setup = ProxSetup::euclidean_unconstrained();
    let x1 = vec![3.0, 2.0, -1.0, 4.0];
    let d2 = model.value(&x1) / l;
    let mut failure = None;
    for n in 1..=100 {
        let config = SolverConfig::new(n as u64, l, 0.0, 1.0);
        let bound = 2.0 * l * l * d2 / n as f64;
        match pg_solve(&model, &setup, &x1, &config, n) {
            Ok(run) => {
                let g = model.gradient(&run.output_x);
                let got = linalg::norm2_sq(&g);
                if got > bound + TOL {
                    failure = Some(format!("N = {n}: {got} > {bound}"));
                    break;
                }
            }
            Err(e) => {
                failure = Some(format!("N = {n}: {e}"));
                break;
            }
        }
    }
    CheckOutcome::new("pg guarantee", failure, "N = 1..100".into())
}

/// Empirical distribution of `R` against the termination-law weights.
pub fn termination_law_fit(draws: usize, stream: &Stream) -> CheckOutcome {
    let l = 2.0;
    let n = 12;
    let schedule: Vec<f64> = (0..n).map(|k| 0.9 / l / (1.0 + k as f64 * 0.2)).collect();
    let policies = [
        ("constant", StepsizePolicy::Constant(0.5 / l)),
        ("schedule", StepsizePolicy::Schedule(schedule)),
    ];
    let mut failure = None;
    let mut detail = Vec::new();
    for (i, (name, policy)) in policies.into_iter().enumerate() {
        let config = SolverConfig::new(1000, l, 1.0, 1.0).with_stepsize(policy);
        let law = match termination_law(&config, n) {
            Ok(law) => law,
            Err(e) => {
                failure = Some(format!("{name}: {e}"));
                break;
            }
        };
        let total: f64 = law.weights().iter().sum();
        let mut counts = vec![0usize; n];
        let mut s = stream.fork(i as u64);
        for _ in 0..draws {
            counts[law.sample(&mut s) - 1] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(law.weights())
            .map(|(&c, w)| {
                let e = draws as f64 * w / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p = ChiSquared::new((n - 1) as f64)
            .map(|d| 1.0 - d.cdf(stat))
            .unwrap_or(0.0);
        detail.push(format!("{name} p = {p:.4}"));
        if p <= 1e-3 {
            failure = Some(format!("{name}: chi-square p = {p:e}"));
            break;
        }
    }
    CheckOutcome::new("termination law", failure, detail.join(", "))
}

/// `rspg_batch_size` against `min(max(1, ceil(sigma sqrt(6 N) / (4 L D))), N)`.
pub fn batch_size_formula(tuples: usize, stream: &Stream) -> CheckOutcome {
    let mut failure = None;
    for i in 0..tuples {
        let mut s = stream.fork(i as u64);
        let budget: u64 = s.random_range(1..100_000);
        let sigma = s.random_range(0.0..50.0);
        let l = s.random_range(0.01..10.0);
        let d = s.random_range(0.01..10.0);
        let raw = (sigma * (6.0 * budget as f64).sqrt() / (4.0 * l * d)).ceil();
        let expected = (raw.max(1.0) as u64).min(budget) as usize;
        match rspg_batch_size(budget, sigma, l, d) {
            Ok(m) if m == expected => {}
            Ok(m) => {
                failure = Some(format!("N = {budget}, sigma = {sigma}: {m} != {expected}"));
                break;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    CheckOutcome::new("batch-size formula", failure, format!("{tuples} tuples"))
}

/// Monte Carlo `f_mu` of `0.5 x'Ax` against `f(x) + mu^2 tr(A) / 2`.
pub fn smoothing_identity(samples: usize, stream: &Stream) -> CheckOutcome {
    let a = [1.0, 2.0, 3.0, 0.5];
    let f = |x: &[f64]| 0.5 * x.iter().zip(&a).map(|(x, a)| a * x * x).sum::<f64>();
    let mut failure = None;
    let mut worst: f64 = 0.0;
    for (i, mu) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let x = [0.3, -0.2, 1.0, 0.7];
        let exact = f(&x) + mu * mu * a.iter().sum::<f64>() / 2.0;
        match smoothed_value_mc(f, &x, mu, samples, &mut stream.fork(i as u64)) {
            Ok(est) => {
                let z = (est.mean - exact).abs() / est.std_error.max(f64::MIN_POSITIVE);
                worst = worst.max(z);
                if z > 3.0 {
                    failure = Some(format!("mu = {mu}: {} vs {exact}, {z:.2} SE", est.mean));
                    break;
                }
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    CheckOutcome::new(
        "smoothing identity",
        failure,
        format!("worst {worst:.2} SE"),
    )
}

/// Every recorded S3VM iterate keeps its bias within `delta` of `2r - 1`.
pub fn s3vm_bias_box() -> CheckOutcome {
    let spec = S3vmSpec {
        n: 20,
        pool_size: 2000,
        ..S3vmSpec::default()
    };
    let outcome = (|| -> rspg_core::Result<(usize, f64)> {
        let problem = gen_s3vm(&spec, &Stream::new(11))?;
        let setup = problem.setup();
        let center = problem.bias_center();
        let config = SolverConfig::new(2000, 5.0, 2.0, 1.0)
            .with_seed(5)
            .with_trajectory();
        let mut worst: f64 = 0.0;
        let mut count = 0;
        let a = rspg_solve(&problem, &setup, &problem.x1, &config)?;
        let b = two_phase_rspg_v(&problem, &setup, &problem.x1, &config, 3, 50)?;
        for run in [a, b] {
            for x in run.trajectory.iter().flatten() {
                worst = worst.max((x[spec.n] - center).abs());
                count += 1;
            }
        }
        Ok((count, worst))
    })();
    match outcome {
        Ok((count, worst)) => {
            let failure = (worst > spec.delta + 1e-12)
                .then(|| format!("bias offset {worst} exceeds {}", spec.delta));
            CheckOutcome::new(
                "s3vm bias box",
                failure,
                format!("{count} iterates, max offset {worst:.4}"),
            )
        }
        Err(e) => CheckOutcome::new("s3vm bias box", Some(e.to_string()), String::new()),
    }
}

const TINY_GRID: &str = r#"
seed = 17
algorithms = ["pg", "rspg", "2-rspg", "2-rspg-v", "rspgf"]
budgets = [300]
replications = 3
runs = 2
evaluation_samples = 300
pilot_samples = 30

[[scenarios]]
name = "lsq"
problem = "least_squares"
n = 8

[[scenarios]]
name = "svm"
problem = "s3vm"
n = 8
pool_size = 500
"#;

/// A small grid gives identical report files on 1 and 4 workers.
pub fn thread_invariance() -> CheckOutcome {
    let outcome = (|| -> crate::error::Result<bool> {
        let config = ExperimentConfig::from_toml(TINY_GRID)?;
        let a = with_threads(Some(1), || run_experiment(&config, RunOptions::default()))?;
        let b = with_threads(Some(4), || run_experiment(&config, RunOptions::default()))?;
        Ok(a.to_json()? == b.to_json()? && a.results_csv()? == b.results_csv()?)
    })();
    match outcome {
        Ok(true) => CheckOutcome::new("thread invariance", None, "1 vs 4 workers".into()),
        Ok(false) => CheckOutcome::new(
            "thread invariance",
            Some("reports differ between worker counts".into()),
            String::new(),
        ),
        Err(e) => CheckOutcome::new("thread invariance", Some(e.to_string()), String::new()),
    }
}

/// Runs every check.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let root = Stream::new(seed);
    vec![
        prox_inequalities(1000, &root.fork(1)),
        pg_guarantee(),
        termination_law_fit(20_000, &root.fork(2)),
        batch_size_formula(50, &root.fork(3)),
        smoothing_identity(200_000, &root.fork(4)),
        s3vm_bias_box(),
        thread_invariance(),
    ]
}
