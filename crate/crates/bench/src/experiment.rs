//! Grid execution: scenarios × algorithms × budgets × replications.
//!
//! Every replication draws from streams keyed by `(seed, scenario, algorithm, NS,
//! replication)`, so the report does not depend on the worker count or on scheduling.

use std::time::Instant;

use rayon::prelude::*;
use rspg_core::oracles::SampleAverage;
use rspg_core::problems::{
    estimate_parameters, evaluate_solution, ProblemInstance, ProblemParams, SolutionMetrics,
};
use rspg_core::rng::label;
use rspg_core::solvers::{
    pg_solve, rspg_batch_size, rspg_solve, rspgf_solve, two_phase_rspg, two_phase_rspg_v,
    SolverConfig, SolverRun,
};
use rspg_core::{ProxSetup, StochasticModel, Stream};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, PostSampleRule, PostSamples, Scenario};
use crate::error::{BenchError, Result};
use crate::report::{ExperimentReport, ReplicationRow, SkippedCell};

const SAMPLE_AVERAGE: u64 = 0x5341_4100_0000_0001;

/// Constants handed to the solvers after applying overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub lipschitz: f64,
    pub sigma: f64,
    pub d_tilde: f64,
    pub d_psi: f64,
    pub gradient_bound: f64,
}

impl Constants {
    pub fn resolve(estimate: &ProblemParams, scenario: &Scenario) -> Self {
        let o = &scenario.constants;
        let lipschitz = o.lipschitz.unwrap_or(estimate.lipschitz);
        Constants {
            lipschitz,
            sigma: o.sigma.unwrap_or(estimate.sigma),
            d_tilde: o
                .d_tilde
                .unwrap_or_else(|| (2.0 * estimate.psi_start / lipschitz).sqrt()),
            d_psi: o
                .d_psi
                .unwrap_or_else(|| (estimate.psi_start / lipschitz).sqrt()),
            gradient_bound: o.gradient_bound.unwrap_or(estimate.gradient_bound),
        }
    }
}

/// Per-scenario facts written into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub name: String,
    pub problem: String,
    pub n: usize,
    pub noise: f64,
    pub estimate: Option<ProblemParams>,
    pub constants: Option<Constants>,
    /// Why the scenario produced no rows, if it did not.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock milliseconds; otherwise `wall_ms` is 0 and output stays reproducible.
    pub timing: bool,
}

/// A generated scenario ready to run.
pub struct PreparedScenario {
    pub index: usize,
    pub instance: ProblemInstance,
    pub constants: Constants,
}

/// Generates the instance and pilot constants of scenario `index`.
///
/// Generation failures are configuration errors; a failed pilot estimate is returned
/// as `Ok(Err(reason))` so the grid can continue without this scenario.
pub fn prepare_scenario(
    config: &ExperimentConfig,
    index: usize,
) -> Result<(
    ScenarioRecord,
    std::result::Result<PreparedScenario, String>,
)> {
    let scenario = &config.scenarios[index];
    let root = Stream::new(config.seed);
    let instance_stream = match scenario.instance_seed {
        Some(seed) => Stream::new(seed),
        None => root.fork_path(&[label::INSTANCE, index as u64]),
    };
    let instance = scenario
        .problem
        .generate(&instance_stream)
        .map_err(|e| BenchError::Config(format!("scenario {}: {e}", scenario.name)))?;
    let mut record = ScenarioRecord {
        name: scenario.name.clone(),
        problem: scenario.problem.name().to_string(),
        n: scenario.problem.dimension(),
        noise: scenario.problem.noise(),
        estimate: None,
        constants: None,
        failure: None,
    };
    let pilot = root.fork_path(&[label::PILOT, index as u64]);
    let estimate = match &instance {
        ProblemInstance::LeastSquares(p) => {
            estimate_parameters(p, &instance.setup(), &p.x1, config.pilot_samples, &pilot)
        }
        ProblemInstance::S3vm(p) => {
            estimate_parameters(p, &instance.setup(), &p.x1, config.pilot_samples, &pilot)
        }
    };
    match estimate {
        Ok(estimate) => {
            let constants = Constants::resolve(&estimate, scenario);
            record.estimate = Some(estimate);
            record.constants = Some(constants.clone());
            Ok((
                record,
                Ok(PreparedScenario {
                    index,
                    instance,
                    constants,
                }),
            ))
        }
        Err(e) => {
            let reason = format!("pilot estimation failed: {e}");
            record.failure = Some(reason.clone());
            Ok((record, Err(reason)))
        }
    }
}

/// One unit of work.
#[derive(Debug, Clone, Copy)]
struct Task {
    scenario: usize,
    algorithm: usize,
    budget: usize,
    replication: usize,
}

/// Oracle budget of one optimization run: `NS / S` for 2-RSPG, `NS` otherwise.
pub fn per_run_budget(algorithm: Algorithm, ns: u64, runs: usize) -> u64 {
    match algorithm {
        Algorithm::TwoPhase => ns / runs as u64,
        _ => ns,
    }
}

/// Post-selection sample size `T` for a run with oracle budget `budget`.
pub fn post_sample_count(
    rule: PostSamples,
    budget: u64,
    constants: &Constants,
) -> std::result::Result<usize, String> {
    match rule {
        PostSamples::Fixed(t) => Ok(t),
        PostSamples::Rule(PostSampleRule::HalfBudget) => Ok(budget.div_ceil(2) as usize),
        PostSamples::Rule(PostSampleRule::HalfIterations) => {
            let m = rspg_batch_size(
                budget,
                constants.sigma,
                constants.lipschitz,
                constants.d_tilde,
            )
            .map_err(|e| e.to_string())?;
            Ok((budget / m as u64).div_ceil(2).max(1) as usize)
        }
    }
}

struct Outcome {
    metrics: SolutionMetrics,
    oracle_calls: u64,
    post_calls: u64,
    wall_ms: u64,
}

struct CellContext<'a> {
    config: &'a ExperimentConfig,
    constants: &'a Constants,
    algorithm: Algorithm,
    ns: u64,
    seed: u64,
    evaluation: Stream,
    timing: bool,
}

impl CellContext<'_> {
    fn solver_config(&self, budget: u64) -> SolverConfig {
        let c = self.constants;
        let mut config =
            SolverConfig::new(budget, c.lipschitz, c.sigma, c.d_tilde).with_seed(self.seed);
        config.alpha = self.config.alpha;
        config.gradient_bound = Some(c.gradient_bound);
        config
    }

    fn solve<M: StochasticModel>(
        &self,
        model: &M,
        setup: &ProxSetup,
        x1: &[f64],
    ) -> rspg_core::Result<(SolverRun, u64)> {
        let budget = per_run_budget(self.algorithm, self.ns, self.config.runs);
        let config = self.solver_config(budget);
        match self.algorithm {
            Algorithm::Pg => {
                if model.exact_gradient(x1).is_some() {
                    let run = pg_solve(model, setup, x1, &config, self.ns as usize)?;
                    let calls = run.sfo_calls;
                    Ok((run, calls))
                } else {
                    let size = self.config.pg_samples();
                    let saa = SampleAverage::new(
                        model,
                        size,
                        &Stream::new(self.seed).fork(SAMPLE_AVERAGE),
                    );
                    let iterations = self.ns as usize / size;
                    let run = pg_solve(&saa, setup, x1, &config, iterations)?;
                    Ok((run, (iterations * size) as u64))
                }
            }
            Algorithm::Rspg => {
                let run = rspg_solve(model, setup, x1, &config)?;
                let calls = run.sfo_calls;
                Ok((run, calls))
            }
            Algorithm::TwoPhase | Algorithm::TwoPhaseV => {
                let t = post_sample_count(self.config.post_samples, budget, self.constants)
                    .map_err(rspg_core::Error::InvalidConfig)?;
                let run = if self.algorithm == Algorithm::TwoPhase {
                    two_phase_rspg(model, setup, x1, &config, self.config.runs, t)?
                } else {
                    two_phase_rspg_v(model, setup, x1, &config, self.config.runs, t)?
                };
                let calls = run.sfo_calls;
                Ok((run, calls))
            }
            Algorithm::Rspgf => {
                let run = rspgf_solve(model, setup, x1, &config)?;
                let calls = run.szo_calls;
                Ok((run, calls))
            }
        }
    }

    fn run<M: StochasticModel>(
        &self,
        model: &M,
        setup: &ProxSetup,
        x1: &[f64],
        truth: Option<&[f64]>,
    ) -> rspg_core::Result<Outcome> {
        let start = Instant::now();
        let (run, oracle_calls) = self.solve(model, setup, x1)?;
        let wall_ms = if self.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        let metrics = evaluate_solution(
            model,
            setup,
            &run.output_x,
            run.output_stepsize,
            self.config.evaluation_samples,
            &self.evaluation,
            truth,
        )?;
        Ok(Outcome {
            metrics,
            oracle_calls,
            post_calls: run.post_calls,
            wall_ms,
        })
    }
}

/// Runs the whole grid in the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.scenarios.len());
    let mut prepared = Vec::new();
    let mut skipped = Vec::new();
    let prepared_results = (0..config.scenarios.len())
        .into_par_iter()
        .map(|i| prepare_scenario(config, i))
        .collect::<Result<Vec<_>>>()?;
    for (record, outcome) in prepared_results {
        match outcome {
            Ok(p) => prepared.push(p),
            Err(reason) => {
                for &algorithm in &config.algorithms {
                    for &ns in &config.budgets {
                        skipped.push(SkippedCell {
                            scenario: record.name.clone(),
                            algorithm,
                            ns,
                            replication: None,
                            reason: reason.clone(),
                        });
                    }
                }
            }
        }
        records.push(record);
    }

    let mut tasks = Vec::new();
    for p in 0..prepared.len() {
        for algorithm in 0..config.algorithms.len() {
            for budget in 0..config.budgets.len() {
                for replication in 0..config.replications {
                    tasks.push(Task {
                        scenario: p,
                        algorithm,
                        budget,
                        replication,
                    });
                }
            }
        }
    }

    let root = Stream::new(config.seed);
    let results: Vec<(Task, std::result::Result<ReplicationRow, String>)> = tasks
        .par_iter()
        .map(|&task| {
            let scenario = &prepared[task.scenario];
            let spec = &config.scenarios[scenario.index];
            let algorithm = config.algorithms[task.algorithm];
            let ns = config.budgets[task.budget];
            let index = scenario.index as u64;
            let ctx = CellContext {
                config,
                constants: &scenario.constants,
                algorithm,
                ns,
                seed: root
                    .fork_path(&[index, algorithm.stream_id(), ns, task.replication as u64])
                    .key(),
                evaluation: root.fork_path(&[label::EVALUATION, index]),
                timing: options.timing,
            };
            let instance = &scenario.instance;
            let setup = instance.setup();
            let outcome = match instance {
                ProblemInstance::LeastSquares(p) => ctx.run(p, &setup, &p.x1, Some(&p.true_x)),
                ProblemInstance::S3vm(p) => ctx.run(p, &setup, &p.x1, None),
            };
            let row = outcome
                .map(|o| ReplicationRow {
                    scenario: spec.name.clone(),
                    n: spec.problem.dimension(),
                    noise: spec.problem.noise(),
                    algorithm,
                    ns,
                    replication: task.replication,
                    mapping_norm_sq: o.metrics.mapping_norm_sq,
                    objective: o.metrics.objective,
                    zero_ratio: o.metrics.zero_ratio,
                    sfo_calls: o.oracle_calls,
                    post_calls: o.post_calls,
                    wall_ms: o.wall_ms,
                })
                .map_err(|e| e.to_string());
            (task, row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut i = 0;
    while i < results.len() {
        let cell = results[i].0;
        let end = i + config.replications;
        let group = &results[i..end];
        let failures: Vec<_> = group
            .iter()
            .filter_map(|(t, r)| r.as_ref().err().map(|e| (t.replication, e)))
            .collect();
        let scenario = &config.scenarios[prepared[cell.scenario].index].name;
        let algorithm = config.algorithms[cell.algorithm];
        let ns = config.budgets[cell.budget];
        if failures.len() == group.len() {
            skipped.push(SkippedCell {
                scenario: scenario.clone(),
                algorithm,
                ns,
                replication: None,
                reason: failures[0].1.clone(),
            });
        } else {
            for (replication, reason) in failures {
                skipped.push(SkippedCell {
                    scenario: scenario.clone(),
                    algorithm,
                    ns,
                    replication: Some(replication),
                    reason: reason.clone(),
                });
            }
            rows.extend(group.iter().filter_map(|(_, r)| r.as_ref().ok().cloned()));
        }
        i = end;
    }

    Ok(ExperimentReport::assemble(
        config.clone(),
        records,
        rows,
        skipped,
    ))
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool when `None`.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(BenchError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BenchError::Runtime(format!("cannot start worker pool: {e}")))?
            .install(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
seed = 3
algorithms = ["pg", "rspg", "2-rspg", "2-rspg-v", "rspgf"]
budgets = [200, 800]
replications = 2
runs = 2
evaluation_samples = 500
pilot_samples = 50
{extra}
[[scenarios]]
name = "lsq"
problem = "least_squares"
n = 10
"#
        );
        ExperimentConfig::from_toml(&text).unwrap()
    }

    #[test]
    fn two_phase_splits_the_budget() {
        assert_eq!(per_run_budget(Algorithm::TwoPhase, 1000, 5), 200);
        assert_eq!(per_run_budget(Algorithm::TwoPhaseV, 1000, 5), 1000);
        assert_eq!(per_run_budget(Algorithm::Rspg, 1000, 5), 1000);
    }

    #[test]
    fn post_sample_rules() {
        let c = Constants {
            lipschitz: 1.0,
            sigma: 0.0,
            d_tilde: 1.0,
            d_psi: 1.0,
            gradient_bound: 1.0,
        };
        let half = PostSamples::Rule(PostSampleRule::HalfBudget);
        assert_eq!(post_sample_count(half, 201, &c).unwrap(), 101);
        assert_eq!(
            post_sample_count(PostSamples::Fixed(7), 201, &c).unwrap(),
            7
        );
        // sigma = 0 gives m = 1, so N equals the budget
        let iters = PostSamples::Rule(PostSampleRule::HalfIterations);
        assert_eq!(post_sample_count(iters, 201, &c).unwrap(), 101);
    }

    #[test]
    fn grid_respects_budgets() {
        let config = small_config("");
        let report = run_experiment(&config, RunOptions::default()).unwrap();
        assert!(report.skipped.is_empty(), "{:?}", report.skipped);
        assert_eq!(report.rows.len(), 5 * 2 * 2);
        for row in &report.rows {
            assert!(row.sfo_calls <= row.ns, "{row:?}");
            assert!(row.mapping_norm_sq.is_finite());
            assert!(row.zero_ratio.is_some());
            assert_eq!(row.wall_ms, 0);
            let has_post = matches!(row.algorithm, Algorithm::TwoPhase | Algorithm::TwoPhaseV);
            assert_eq!(row.post_calls > 0, has_post, "{row:?}");
        }
    }

    #[test]
    fn deterministic_pg_has_zero_variance() {
        let config = small_config("");
        let report = run_experiment(&config, RunOptions::default()).unwrap();
        let pg: Vec<_> = report
            .aggregates
            .iter()
            .filter(|a| a.algorithm == Algorithm::Pg)
            .collect();
        assert!(!pg.is_empty());
        for a in pg {
            assert_eq!(a.mapping_norm_sq.variance, Some(0.0));
            assert_eq!(a.objective.variance, Some(0.0));
        }
    }

    #[test]
    fn infeasible_cells_are_skipped() {
        // 2-RSPG with S = 2 and NS = 1 gets a zero per-run budget
        let mut config = small_config("");
        config.budgets = vec![1, 200];
        let report = run_experiment(&config, RunOptions::default()).unwrap();
        assert!(report
            .skipped
            .iter()
            .any(|s| s.algorithm == Algorithm::TwoPhase && s.ns == 1 && s.replication.is_none()));
        assert!(report.rows.iter().any(|r| r.ns == 200));
    }

    #[test]
    fn thread_count_does_not_change_rows() {
        let config = small_config("");
        let one = with_threads(Some(1), || run_experiment(&config, RunOptions::default())).unwrap();
        let three =
            with_threads(Some(3), || run_experiment(&config, RunOptions::default())).unwrap();
        assert_eq!(one, three);
    }
}
