use rayon::prelude::*;

use crate::error::{invalid_config, Result};
use crate::geometry::ProxSetup;
use crate::oracles::{CountingOracle, FirstOrderOracle};
use crate::rng::{label, Stream};

use super::rspg::{
    check_start, estimated_mapping_norm_sq, first_order_plan, randomized_path, rspg_on_stream,
};
use super::{PhaseMetadata, SolverConfig, SolverRun};
use crate::oracles::minibatch_mean;

/// Result of the post-optimization phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Position of the winning candidate.
    pub selected: usize,
    pub x: Vec<f64>,
    /// `|P_X(x_s, G_T(x_s), gamma_s)|` for every candidate.
    pub scores: Vec<f64>,
}

/// Picks the candidate with the smallest estimated gradient-mapping norm.
///
/// Candidate `s` is scored with a `t`-sample mini-batch drawn from `stream.fork(s)` and its
/// own stepsize `gammas[s]`. Ties go to the earliest candidate.
pub fn post_select<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    candidates: &[Vec<f64>],
    gammas: &[f64],
    t: usize,
    stream: &Stream,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(invalid_config(
            "post-selection needs at least one candidate",
        ));
    }
    if gammas.len() != candidates.len() {
        return Err(invalid_config("one stepsize per candidate is required"));
    }
    if t == 0 {
        return Err(invalid_config(
            "post-selection sample size must be at least 1",
        ));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for (s, (x, &gamma)) in candidates.iter().zip(gammas).enumerate() {
        let sq = estimated_mapping_norm_sq(oracle, setup, x, gamma, t, &stream.fork(s as u64))?;
        scores.push(sq.sqrt());
    }
    let mut selected = 0;
    for (s, &v) in scores.iter().enumerate() {
        if v < scores[selected] {
            selected = s;
        }
    }
    Ok(Selection {
        selected,
        x: candidates[selected].clone(),
        scores,
    })
}

/// Two-phase RSPG: `runs` independent RSPG runs from the same start, then post-selection
/// with `t` samples per candidate.
///
/// `config.budget` is the budget of each run. The runs execute in parallel on disjoint
/// streams, so results do not depend on the thread count. `sfo_calls` counts the
/// optimization phase; post-selection calls are reported in `post_calls`.
pub fn two_phase_rspg<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
    runs: usize,
    t: usize,
) -> Result<SolverRun> {
    if runs == 0 {
        return Err(invalid_config("two-phase method needs at least one run"));
    }
    let root = Stream::new(config.seed);
    let run_root = root.fork(label::RUNS);
    let results = (0..runs)
        .into_par_iter()
        .map(|s| rspg_on_stream(oracle, setup, x1, config, &run_root.fork(s as u64)))
        .collect::<Result<Vec<_>>>()?;
    let candidates: Vec<Vec<f64>> = results.iter().map(|r| r.output_x.clone()).collect();
    let gammas: Vec<f64> = results.iter().map(|r| r.output_stepsize).collect();
    let counter = CountingOracle::new(oracle);
    let pick = post_select(
        &counter,
        setup,
        &candidates,
        &gammas,
        t,
        &root.fork(label::POST),
    )?;
    let chosen = &results[pick.selected];
    Ok(SolverRun {
        output_x: pick.x,
        random_index: chosen.random_index,
        output_stepsize: chosen.output_stepsize,
        iterations: chosen.iterations,
        batch_size: chosen.batch_size,
        trajectory: chosen.trajectory.clone(),
        mapping_norms_sq: chosen.mapping_norms_sq.clone(),
        sfo_calls: results.iter().map(|r| r.sfo_calls).sum(),
        szo_calls: 0,
        post_calls: counter.sfo_calls(),
        phase: Some(PhaseMetadata {
            candidate_indices: results.iter().map(|r| r.random_index).collect(),
            candidates,
            candidate_stepsizes: gammas,
            scores: pick.scores,
            selected: pick.selected,
            runs: results,
        }),
    })
}

/// Two-phase RSPG variant: one full trajectory `x_1 .. x_N` without random stopping,
/// `picks` indices drawn with replacement from the termination law, then post-selection
/// with `t` samples per candidate.
///
/// The whole trajectory is kept in memory (`O(N n)`) to sample candidates afterwards.
pub fn two_phase_rspg_v<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    setup: &ProxSetup,
    x1: &[f64],
    config: &SolverConfig,
    picks: usize,
    t: usize,
) -> Result<SolverRun> {
    if picks == 0 {
        return Err(invalid_config(
            "two-phase method needs at least one candidate",
        ));
    }
    check_start(setup, x1, oracle.dim())?;
    let plan = first_order_plan(config)?;
    let root = Stream::new(config.seed);
    let counter = CountingOracle::new(oracle);
    let path = randomized_path(
        setup,
        x1,
        &plan.stepsizes,
        plan.n,
        true,
        &root.fork(label::ITERATIONS),
        |x, s| minibatch_mean(&counter, x, plan.m, s),
    )?;
    let trajectory = path.trajectory.unwrap_or_default();
    let mut draw = root.fork(label::CANDIDATES);
    let indices: Vec<usize> = (0..picks).map(|_| plan.law.sample(&mut draw)).collect();
    let candidates: Vec<Vec<f64>> = indices.iter().map(|&k| trajectory[k - 1].clone()).collect();
    let gammas: Vec<f64> = indices.iter().map(|&k| plan.stepsizes[k - 1]).collect();
    let post = CountingOracle::new(oracle);
    let pick = post_select(
        &post,
        setup,
        &candidates,
        &gammas,
        t,
        &root.fork(label::POST),
    )?;
    let r = indices[pick.selected];
    Ok(SolverRun {
        output_x: pick.x,
        random_index: r,
        output_stepsize: plan.stepsizes[r - 1],
        iterations: plan.n,
        batch_size: plan.m,
        trajectory: config.record_trajectory.then_some(trajectory),
        mapping_norms_sq: path.mapping_norms_sq,
        sfo_calls: counter.sfo_calls(),
        szo_calls: 0,
        post_calls: post.sfo_calls(),
        phase: Some(PhaseMetadata {
            candidates,
            candidate_indices: indices,
            candidate_stepsizes: gammas,
            scores: pick.scores,
            selected: pick.selected,
            runs: Vec::new(),
        }),
    })
}
