//! Theoretical guarantees for every cell of a grid, from the resolved problem constants.

use rayon::prelude::*;
use rspg_core::solvers::{
    compute_theory_bounds, rspg_batch_size, rspgf_batch_size, rspgf_smoothing_mu, BoundInputs,
    TheoryBounds,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::experiment::{per_run_budget, prepare_scenario, Constants};
use crate::summary::ABSENT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub scenario: String,
    pub algorithm: Algorithm,
    #[serde(rename = "NS")]
    pub ns: u64,
    /// Constant stepsize the algorithm uses.
    pub stepsize: f64,
    /// Inputs fed to the calculators; the stepsize list is left out.
    pub inputs: BoundInputs,
    pub bounds: TheoryBounds,
    /// Why iteration counts are missing, if they are.
    pub note: Option<String>,
}

/// Bound inputs for one algorithm at total budget `ns`.
pub fn bound_inputs(
    algorithm: Algorithm,
    ns: u64,
    dim: usize,
    constants: &Constants,
    config: &ExperimentConfig,
    exact_gradient: bool,
) -> (BoundInputs, f64, Option<String>) {
    let c = constants;
    let alpha = config.alpha;
    let budget = per_run_budget(algorithm, ns, config.runs);
    let mut inputs = BoundInputs {
        lipschitz: Some(c.lipschitz),
        alpha: Some(alpha),
        sigma: Some(c.sigma),
        d_psi: Some(c.d_psi),
        d_tilde: Some(c.d_tilde),
        budget: Some(budget),
        dim: Some(dim),
        gradient_bound: Some(c.gradient_bound),
        ..BoundInputs::default()
    };
    let (plan, gamma) = match algorithm {
        Algorithm::Pg => {
            let n = if exact_gradient {
                ns as usize
            } else {
                ns as usize / config.pg_samples()
            };
            (Ok((n, None)), alpha / c.lipschitz)
        }
        Algorithm::Rspgf => {
            let plan = rspgf_batch_size(
                budget,
                dim,
                c.gradient_bound,
                c.sigma,
                c.lipschitz,
                c.d_tilde,
            )
            .and_then(|m| {
                let mu = rspgf_smoothing_mu(c.d_tilde, dim, budget, false, alpha)?;
                inputs.mu = Some(mu);
                Ok((budget as usize / m, Some(m)))
            });
            (plan, alpha / (2.0 * c.lipschitz))
        }
        _ => {
            let plan = rspg_batch_size(budget, c.sigma, c.lipschitz, c.d_tilde)
                .map(|m| (budget as usize / m, Some(m)));
            (plan, alpha / (2.0 * c.lipschitz))
        }
    };
    let note = match plan {
        Ok((0, _)) => Some("budget allows no iterations".to_string()),
        Ok((n, m)) => {
            inputs.iterations = Some(n);
            inputs.batch_size = m;
            inputs.stepsizes = Some(vec![gamma; n]);
            None
        }
        Err(e) => Some(e.to_string()),
    };
    (inputs, gamma, note)
}

/// Evaluates the bounds for every (scenario, algorithm, NS) cell in grid order.
pub fn grid_bounds(config: &ExperimentConfig) -> Result<Vec<BoundRecord>> {
    config.validate()?;
    let prepared = (0..config.scenarios.len())
        .into_par_iter()
        .map(|i| prepare_scenario(config, i))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (record, scenario) in prepared {
        let scenario = scenario
            .map_err(|reason| BenchError::Runtime(format!("scenario {}: {reason}", record.name)))?;
        let dim = scenario.instance.x1().len();
        let exact = scenario.instance.truth().is_some();
        for &algorithm in &config.algorithms {
            for &ns in &config.budgets {
                let (mut inputs, stepsize, note) =
                    bound_inputs(algorithm, ns, dim, &scenario.constants, config, exact);
                let bounds = compute_theory_bounds(&inputs);
                inputs.stepsizes = None;
                out.push(BoundRecord {
                    scenario: record.name.clone(),
                    algorithm,
                    ns,
                    stepsize,
                    inputs,
                    bounds,
                    note,
                });
            }
        }
    }
    Ok(out)
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), ABSENT.to_string())),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Long format: `scenario,algorithm,NS,bound,value`.
pub fn bounds_csv(records: &[BoundRecord]) -> Result<String> {
    let err = |e: csv::Error| BenchError::Runtime(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "algorithm", "NS", "bound", "value"])
        .map_err(err)?;
    for r in records {
        let value =
            serde_json::to_value(&r.bounds).map_err(|e| BenchError::Runtime(e.to_string()))?;
        let mut fields = Vec::new();
        flatten("", &value, &mut fields);
        for (bound, v) in fields {
            w.write_record([
                r.scenario.as_str(),
                r.algorithm.name(),
                &r.ns.to_string(),
                &bound,
                &v,
            ])
            .map_err(err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Runtime(e.to_string()))
}

pub fn bounds_json(records: &[BoundRecord]) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(records).map_err(|e| BenchError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
