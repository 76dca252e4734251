use crate::error::{invalid_config, Result};
use crate::geometry::ProxSetup;
use crate::oracles::FirstOrderOracle;

use super::config::check_stepsizes;
use super::rspg::check_start;
use super::{SolverConfig, SolverRun};

/// Deterministic projected gradient with exact gradients.
///
/// Runs `n` prox steps and returns the iterate `x_R` whose gradient mapping has the
/// smallest norm (first one on ties). The default stepsize is `alpha / L`; any
/// stepsize in `(0, 2 alpha / L]` is accepted as long as one is strictly inside.
pub fn pg_solve<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
    n: usize,
) -> Result<SolverRun> {
    if n == 0 {
        return Err(invalid_config("PG needs at least one iteration"));
    }
    check_start(setup, x1, oracle.dim())?;
    config.check_constants()?;
    let steps = config.stepsizes(n, config.alpha / config.lipschitz)?;
    check_stepsizes(&steps, 2.0 * config.alpha / config.lipschitz)?;

    let mut x = x1.to_vec();
    let mut trajectory = config.record_trajectory.then(Vec::new);
    let mut norms = Vec::with_capacity(n);
    let mut best = (f64::INFINITY, 0usize, x.clone());
    for (k, &gamma) in steps.iter().enumerate() {
        let grad = oracle
            .true_gradient(&x)
            .ok_or_else(|| invalid_config("PG needs an oracle with exact gradients"))?;
        let step = setup.prox_step(&x, &grad, gamma)?;
        let norm_sq = setup.geometry.norm(&step.mapping).powi(2);
        norms.push(norm_sq);
        if norm_sq < best.0 {
            best = (norm_sq, k, x.clone());
        }
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
        x = step.x_plus;
    }
    let (_, r, output_x) = best;
    Ok(SolverRun {
        output_x,
        random_index: r + 1,
        output_stepsize: steps[r],
        iterations: n,
        batch_size: 1,
        trajectory,
        mapping_norms_sq: norms,
        sfo_calls: n as u64,
        szo_calls: 0,
        post_calls: 0,
        phase: None,
    })
}
