use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::geometry::ProxSetup;
use crate::oracles::{BatchAccumulator, StochasticModel};
use crate::rng::Stream;

/// Entries below this magnitude count as recovered zeros.
pub const ZERO_THRESHOLD: f64 = 0.02;

/// Default evaluation sample size.
pub const DEFAULT_EVALUATION_SAMPLES: usize = 75_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    /// `|P_X(x, G_K(x), gamma)|^2` with `G_K` a `K`-sample mean gradient.
    pub mapping_norm_sq: f64,
    /// `K`-sample mean of `F(x, xi)` plus `h(x)`.
    pub objective: f64,
    pub zero_ratio: Option<f64>,
}

/// Share of the true zeros of `truth` whose entry in `x` is below `threshold` in magnitude.
pub fn zero_recovery_ratio(x: &[f64], truth: &[f64], threshold: f64) -> Option<f64> {
    let zeros: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == 0.0).collect();
    if zeros.is_empty() {
        return None;
    }
    let hit = zeros.iter().filter(|&&i| x[i].abs() < threshold).count();
    Some(hit as f64 / zeros.len() as f64)
}

/// Scores `x` on `k` fresh samples; sample `i` is drawn from `stream.fork(i)`.
pub fn evaluate_solution<M: StochasticModel>(
    model: &M,
    setup: &ProxSetup,
    x: &[f64],
    gamma: f64,
    k: usize,
    stream: &Stream,
    truth: Option<&[f64]>,
) -> Result<SolutionMetrics> {
    if k == 0 {
        return Err(invalid_input("evaluation needs at least one sample"));
    }
    let mut grads = BatchAccumulator::new(x.len());
    let mut value = 0.0;
    for i in 0..k {
        let noise = model.draw_noise(&mut stream.fork(i as u64));
        value += (model.sample_value(x, &noise) - value) / (i + 1) as f64;
        grads.push(&model.sample_gradient(x, &noise));
    }
    let mean = grads.finish().mean_gradient;
    let mapping = setup.gradient_mapping(x, &mean, gamma)?;
    Ok(SolutionMetrics {
        mapping_norm_sq: setup.geometry.norm(&mapping).powi(2),
        objective: value + setup.term.value(x),
        zero_ratio: truth.and_then(|t| zero_recovery_ratio(x, t, ZERO_THRESHOLD)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticModel;

    #[test]
    fn zero_ratio_counts_true_zeros_only() {
        let truth = [0.0, 1.0, 0.0, 0.0, -2.0];
        let x = [0.01, 0.0, 0.5, -0.019, 3.0];
        assert_eq!(
            zero_recovery_ratio(&x, &truth, ZERO_THRESHOLD),
            Some(2.0 / 3.0)
        );
        assert_eq!(
            zero_recovery_ratio(&truth, &truth, ZERO_THRESHOLD),
            Some(1.0)
        );
        assert_eq!(zero_recovery_ratio(&[1.0], &[1.0], ZERO_THRESHOLD), None);
    }

    #[test]
    fn deterministic_metrics_ignore_rng_and_sample_size() {
        let q = QuadraticModel::new(vec![2.0, 1.0], vec![1.0, 0.0], 0.0).unwrap();
        let setup = ProxSetup::euclidean_unconstrained();
        let x = [0.0, 3.0];
        let a = evaluate_solution(&q, &setup, &x, 0.25, 1, &Stream::new(0), None).unwrap();
        let b = evaluate_solution(&q, &setup, &x, 0.25, 777, &Stream::new(9), None).unwrap();
        assert_eq!(a, b);
        assert!((a.mapping_norm_sq - 13.0).abs() < 1e-12);
        assert_eq!(a.objective, 5.5);
        assert!(evaluate_solution(&q, &setup, &x, 0.25, 0, &Stream::new(0), None).is_err());
    }
}
