use crate::error::{invalid_config, Result};
use crate::geometry::ProxSetup;
use crate::oracles::{
    minibatch_mean, minibatch_smoothed_mean, CountingOracle, FirstOrderOracle, MiniBatchResult,
    ZerothOrderOracle,
};
use crate::rng::{label, Stream};

use super::law::TerminationLaw;
use super::params::{rspg_batch_size, rspgf_batch_size, rspgf_smoothing_mu};
use super::{SolverConfig, SolverRun};

/// Iterates produced by the randomized loop.
pub(crate) struct Path {
    pub last: Vec<f64>,
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub mapping_norms_sq: Vec<f64>,
}

/// Runs `stop - 1` prox steps from `x1`; step `k` draws its batch from `root.fork(k)`.
pub(crate) fn randomized_path<E>(
    setup: &ProxSetup,
    x1: &[f64],
    stepsizes: &[f64],
    stop: usize,
    record: bool,
    root: &Stream,
    mut estimate: E,
) -> Result<Path>
where
    E: FnMut(&[f64], &Stream) -> Result<MiniBatchResult>,
{
    let mut x = x1.to_vec();
    let mut trajectory = record.then(|| vec![x.clone()]);
    let mut norms = Vec::with_capacity(stop.saturating_sub(1));
    for k in 1..stop {
        let batch = estimate(&x, &root.fork(k as u64))?;
        let step = setup.prox_step(&x, &batch.mean_gradient, stepsizes[k - 1])?;
        norms.push(setup.geometry.norm(&step.mapping).powi(2));
        x = step.x_plus;
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
    }
    Ok(Path {
        last: x,
        trajectory,
        mapping_norms_sq: norms,
    })
}

pub(crate) fn check_start(setup: &ProxSetup, x1: &[f64], dim: usize) -> Result<()> {
    if x1.len() != dim {
        return Err(invalid_config(format!(
            "starting point has dimension {}, oracle has {dim}",
            x1.len()
        )));
    }
    setup.check_supported()?;
    setup.set.validate(dim)?;
    if !setup.set.contains(x1, 1e-9) {
        return Err(invalid_config("starting point is outside the feasible set"));
    }
    Ok(())
}

/// Iteration count `floor(N_bar / m)`, which must be positive.
pub(crate) fn iteration_count(budget: u64, m: usize) -> Result<usize> {
    let n = budget / m as u64;
    if n == 0 {
        return Err(invalid_config(format!(
            "budget {budget} cannot pay for one batch of {m} samples"
        )));
    }
    Ok(n as usize)
}

/// Batch size, iteration count, stepsizes and law of a first-order run.
pub(crate) struct Plan {
    pub m: usize,
    pub n: usize,
    pub stepsizes: Vec<f64>,
    pub law: TerminationLaw,
}

pub(crate) fn first_order_plan(config: &SolverConfig) -> Result<Plan> {
    config.check_constants()?;
    let m = match config.batch_size {
        Some(0) => return Err(invalid_config("batch size must be at least 1")),
        Some(m) => m,
        None => rspg_batch_size(
            config.budget,
            config.sigma,
            config.lipschitz,
            config.d_tilde,
        )?,
    };
    plan_with_batch(config, m)
}

fn plan_with_batch(config: &SolverConfig, m: usize) -> Result<Plan> {
    let n = iteration_count(config.budget, m)?;
    let stepsizes = config.randomized_stepsizes(n)?;
    let law = TerminationLaw::new(
        &stepsizes,
        config.alpha,
        config.lipschitz,
        config.relaxed_law,
    )?;
    Ok(Plan {
        m,
        n,
        stepsizes,
        law,
    })
}

/// Randomized stochastic projected gradient.
///
/// The output index `R` is drawn before any oracle call; the method then performs
/// `R - 1` mini-batch prox steps and returns `x_R`.
pub fn rspg_solve<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
) -> Result<SolverRun> {
    rspg_on_stream(oracle, setup, x1, config, &Stream::new(config.seed))
}

pub(crate) fn rspg_on_stream<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
    root: &Stream,
) -> Result<SolverRun> {
    check_start(setup, x1, oracle.dim())?;
    let plan = first_order_plan(config)?;
    let r = plan.law.sample(&mut root.fork(label::TERMINATION));
    let counter = CountingOracle::new(oracle);
    let path = randomized_path(
        setup,
        x1,
        &plan.stepsizes,
        r,
        config.record_trajectory,
        &root.fork(label::ITERATIONS),
        |x, s| minibatch_mean(&counter, x, plan.m, s),
    )?;
    Ok(SolverRun {
        output_x: path.last,
        random_index: r,
        output_stepsize: plan.stepsizes[r - 1],
        iterations: plan.n,
        batch_size: plan.m,
        trajectory: path.trajectory,
        mapping_norms_sq: path.mapping_norms_sq,
        sfo_calls: counter.sfo_calls(),
        szo_calls: 0,
        post_calls: 0,
        phase: None,
    })
}

/// Randomized stochastic projected gradient-free method: RSPG driven by the
/// Gaussian-smoothing gradient estimator.
///
/// The smoothing parameter defaults to `D_tilde / sqrt((n+4) N_bar)` and the batch size
/// to the zeroth-order formula, which needs `config.gradient_bound`.
pub fn rspgf_solve<O: ZerothOrderOracle + ?Sized>(
    szo: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
) -> Result<SolverRun> {
    let dim = szo.dim();
    check_start(setup, x1, dim)?;
    config.check_constants()?;
    let m = match config.batch_size {
        Some(0) => return Err(invalid_config("batch size must be at least 1")),
        Some(m) => m,
        None => {
            let bound = config
                .gradient_bound
                .ok_or_else(|| invalid_config("zeroth-order batch size needs a gradient bound"))?;
            rspgf_batch_size(
                config.budget,
                dim,
                bound,
                config.sigma,
                config.lipschitz,
                config.d_tilde,
            )?
        }
    };
    let mu = match config.smoothing_mu {
        Some(mu) if mu > 0.0 && mu.is_finite() => mu,
        Some(mu) => {
            return Err(invalid_config(format!(
                "smoothing parameter {mu} must be positive"
            )))
        }
        None => rspgf_smoothing_mu(config.d_tilde, dim, config.budget, false, config.alpha)?,
    };
    let plan = plan_with_batch(config, m)?;
    let root = Stream::new(config.seed);
    let r = plan.law.sample(&mut root.fork(label::TERMINATION));
    let counter = CountingOracle::new(szo);
    let path = randomized_path(
        setup,
        x1,
        &plan.stepsizes,
        r,
        config.record_trajectory,
        &root.fork(label::ITERATIONS),
        |x, s| minibatch_smoothed_mean(&counter, x, mu, plan.m, s),
    )?;
    Ok(SolverRun {
        output_x: path.last,
        random_index: r,
        output_stepsize: plan.stepsizes[r - 1],
        iterations: plan.n,
        batch_size: plan.m,
        trajectory: path.trajectory,
        mapping_norms_sq: path.mapping_norms_sq,
        sfo_calls: 0,
        szo_calls: counter.szo_calls(),
        post_calls: 0,
        phase: None,
    })
}

/// `|P_X(x, G_bar, gamma)|^2` with `G_bar` a `samples`-sized mini-batch mean.
pub fn estimated_mapping_norm_sq<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x: &[f64],
    gamma: f64,
    samples: usize,
    stream: &Stream,
) -> Result<f64> {
    let batch = minibatch_mean(oracle, x, samples, stream)?;
    let p = setup.gradient_mapping(x, &batch.mean_gradient, gamma)?;
    Ok(setup.geometry.norm(&p).powi(2))
}

/// `|P_X(x, grad f(x), gamma)|^2` from the exact gradient, when the oracle knows it.
pub fn true_mapping_norm_sq<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x: &[f64],
    gamma: f64,
) -> Result<Option<f64>> {
    let Some(g) = oracle.true_gradient(x) else {
        return Ok(None);
    };
    let p = setup.gradient_mapping(x, &g, gamma)?;
    Ok(Some(setup.geometry.norm(&p).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FeasibleSet, Geometry, SimpleTerm};
    use crate::problems::QuadraticModel;
    use crate::solvers::two_phase_rspg_v;

    fn noisy() -> QuadraticModel {
        QuadraticModel::new(vec![1.0, 0.5, 2.0], vec![0.2, -0.4, 1.0], 0.8).unwrap()
    }

    #[test]
    fn counters_match_random_index() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        for seed in 0..20 {
            let cfg = SolverConfig::new(2_000, 2.0, 0.8, 1.0).with_seed(seed);
            let run = rspg_solve(&q, &setup, &[1.0; 3], &cfg).unwrap();
            assert_eq!(
                run.batch_size,
                rspg_batch_size(2_000, 0.8, 2.0, 1.0).unwrap()
            );
            assert_eq!(run.iterations, 2_000 / run.batch_size);
            assert_eq!(
                run.sfo_calls,
                (run.random_index as u64 - 1) * run.batch_size as u64
            );
            assert!(run.sfo_calls <= 2_000);
            assert_eq!(run.mapping_norms_sq.len(), run.random_index - 1);
        }
    }

    #[test]
    fn same_seed_same_run() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        let cfg = SolverConfig::new(500, 2.0, 0.8, 1.0)
            .with_seed(11)
            .with_trajectory();
        let a = rspg_solve(&q, &setup, &[1.0; 3], &cfg).unwrap();
        let b = rspg_solve(&q, &setup, &[1.0; 3], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trajectory.as_ref().unwrap().len(), a.random_index);
    }

    #[test]
    fn random_index_drawn_before_oracle() {
        // Noise level changes the oracle but not the index drawn for a given seed.
        let setup = ProxSetup::euclidean_unconstrained();
        let quiet = QuadraticModel::isotropic(vec![0.0; 3], 0.0).unwrap();
        for seed in 0..10 {
            let cfg = SolverConfig::new(300, 1.0, 0.0, 1.0)
                .with_seed(seed)
                .with_batch_size(3);
            let a = rspg_solve(&noisy(), &setup, &[1.0; 3], &cfg).unwrap();
            let b = rspg_solve(
                &quiet,
                &setup,
                &[1.0; 3],
                &cfg.clone()
                    .with_stepsize(super::super::StepsizePolicy::Constant(0.5)),
            )
            .unwrap();
            assert_eq!(a.random_index, b.random_index);
        }
    }

    #[test]
    fn single_iteration_returns_start() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        let cfg = SolverConfig::new(7, 2.0, 0.8, 1.0).with_batch_size(5);
        let run = rspg_solve(&q, &setup, &[1.0; 3], &cfg).unwrap();
        assert_eq!(run.iterations, 1);
        assert_eq!(run.random_index, 1);
        assert_eq!(run.output_x, vec![1.0; 3]);
        assert_eq!(run.sfo_calls, 0);
    }

    #[test]
    fn budget_below_batch_rejected() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        let cfg = SolverConfig::new(4, 2.0, 0.8, 1.0).with_batch_size(5);
        assert!(rspg_solve(&q, &setup, &[1.0; 3], &cfg).is_err());
        let zero = SolverConfig::new(4, 2.0, 0.8, 1.0).with_batch_size(0);
        assert!(rspg_solve(&q, &setup, &[1.0; 3], &zero).is_err());
    }

    #[test]
    fn start_must_be_feasible_and_sized() {
        let q = noisy();
        let boxed = ProxSetup::new(
            Geometry::Euclidean,
            FeasibleSet::unit_box(3, -1.0, 1.0),
            SimpleTerm::Zero,
        );
        let cfg = SolverConfig::new(100, 2.0, 0.8, 1.0);
        assert!(rspg_solve(&q, &boxed, &[2.0, 0.0, 0.0], &cfg).is_err());
        assert!(rspg_solve(&q, &boxed, &[0.0, 0.0], &cfg).is_err());
        assert!(rspg_solve(&q, &boxed, &[0.5, 0.0, 0.0], &cfg).is_ok());
    }

    #[test]
    fn noiseless_convex_gap_within_bound() {
        // Without noise the trajectory is deterministic, so the expectation over R is a
        // weighted sum over the full trajectory.
        let q = QuadraticModel::new(vec![1.0, 0.2], vec![1.0, -1.0], 0.0).unwrap();
        let setup = ProxSetup::euclidean_unconstrained();
        let x1 = [4.0, 3.0];
        let l = 1.0;
        for budget in [1, 5, 20, 100] {
            let cfg = SolverConfig::new(budget, l, 0.0, 1.0).with_trajectory();
            let run = two_phase_rspg_v(&q, &setup, &x1, &cfg, 1, 1).unwrap();
            let traj = run.trajectory.unwrap();
            let n = run.iterations;
            let w = 1.0 / n as f64;
            let expected: f64 = traj.iter().map(|x| w * q.value(x)).sum();
            let v = 0.5 * ((x1[0] - 1.0f64).powi(2) + (x1[1] + 1.0f64).powi(2));
            assert!(expected <= 2.0 * l * v / n as f64, "budget {budget}");
        }
    }

    #[test]
    fn gradient_free_counts_pairs() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        for seed in 0..5 {
            let mut cfg = SolverConfig::new(3_000, 2.0, 0.8, 1.0).with_seed(seed);
            cfg.gradient_bound = Some(5.0);
            let run = rspgf_solve(&q, &setup, &[1.0; 3], &cfg).unwrap();
            assert_eq!(
                run.batch_size,
                rspgf_batch_size(3_000, 3, 5.0, 0.8, 2.0, 1.0).unwrap()
            );
            assert_eq!(
                run.szo_calls,
                (run.random_index as u64 - 1) * run.batch_size as u64
            );
            assert_eq!(run.sfo_calls, 0);
        }
    }

    #[test]
    fn gradient_free_needs_gradient_bound() {
        let q = noisy();
        let setup = ProxSetup::euclidean_unconstrained();
        let cfg = SolverConfig::new(3_000, 2.0, 0.8, 1.0);
        assert!(rspgf_solve(&q, &setup, &[1.0; 3], &cfg).is_err());
        assert!(rspgf_solve(&q, &setup, &[1.0; 3], &cfg.clone().with_batch_size(10)).is_ok());
        let mut bad_mu = cfg.with_batch_size(10);
        bad_mu.smoothing_mu = Some(0.0);
        assert!(rspgf_solve(&q, &setup, &[1.0; 3], &bad_mu).is_err());
    }

    #[test]
    fn entropy_runs_stay_on_simplex() {
        let q = QuadraticModel::isotropic(vec![0.7, 0.2, 0.1, 0.0], 0.5).unwrap();
        let setup = ProxSetup::new(
            Geometry::EntropySimplex,
            FeasibleSet::Simplex,
            SimpleTerm::Zero,
        );
        let cfg = SolverConfig::new(4_000, 1.0, 0.5, 1.0)
            .with_seed(3)
            .with_trajectory();
        let run = rspg_solve(&q, &setup, &[0.25; 4], &cfg).unwrap();
        for x in run.trajectory.unwrap() {
            assert!(FeasibleSet::Simplex.contains(&x, 1e-12));
            assert!(x.iter().all(|v| *v > 0.0));
        }
    }
}
