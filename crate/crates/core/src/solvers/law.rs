use rand::distr::{weighted::WeightedIndex, Distribution};

use crate::error::{invalid_config, Result};
use crate::rng::Stream;

/// Probability mass function `P_R` of the random output index `R` on `{1..N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminationLaw {
    weights: Vec<f64>,
}

impl TerminationLaw {
    /// `P_R(k)` proportional to `alpha g_k - L g_k^2` (strict) or
    /// `alpha g_k - L g_k^2 / 2` (relaxed).
    pub fn new(stepsizes: &[f64], alpha: f64, lipschitz: f64, relaxed: bool) -> Result<Self> {
        if stepsizes.is_empty() {
            return Err(invalid_config(
                "termination law needs at least one iteration",
            ));
        }
        let c = if relaxed { 0.5 } else { 1.0 };
        let raw: Vec<f64> = stepsizes
            .iter()
            .map(|&g| (g * (alpha - c * lipschitz * g)).max(0.0))
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(invalid_config("termination law has no positive weight"));
        }
        Ok(TerminationLaw {
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    /// `P_R(k)` for `k = 1..N`, stored at index `k - 1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Draws a 1-based index.
    pub fn sample(&self, stream: &mut Stream) -> usize {
        if self.weights.len() == 1 {
            return 1;
        }
        let dist = WeightedIndex::new(&self.weights).expect("weights validated at construction");
        dist.sample(stream) + 1
    }
}

/// Termination law of a solver configuration over `n` iterations.
pub fn termination_law(config: &super::SolverConfig, n: usize) -> Result<TerminationLaw> {
    config.check_constants()?;
    let steps = config.randomized_stepsizes(n)?;
    TerminationLaw::new(&steps, config.alpha, config.lipschitz, config.relaxed_law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{SolverConfig, StepsizePolicy};

    #[test]
    fn constant_stepsize_is_uniform() {
        let cfg = SolverConfig::new(100, 2.0, 0.0, 1.0);
        let law = termination_law(&cfg, 4).unwrap();
        for w in law.weights() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn schedule_with_boundary_step_gets_zero_mass() {
        let l = 2.0;
        let cfg = SolverConfig::new(100, l, 0.0, 1.0)
            .with_stepsize(StepsizePolicy::Schedule(vec![1.0 / (2.0 * l), 1.0 / l]));
        let law = termination_law(&cfg, 2).unwrap();
        assert_eq!(law.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn relaxed_law_at_alpha_over_l_is_uniform() {
        let mut cfg = SolverConfig::new(100, 4.0, 0.0, 1.0)
            .with_stepsize(StepsizePolicy::Schedule(vec![0.25, 0.25, 0.25, 0.1]));
        cfg.relaxed_law = true;
        let law = termination_law(&cfg, 3).unwrap();
        for w in law.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_zero_weights_rejected() {
        assert!(TerminationLaw::new(&[1.0, 1.0], 1.0, 1.0, false).is_err());
        // Strict validation also rejects a schedule pinned at alpha / L.
        let cfg =
            SolverConfig::new(100, 1.0, 0.0, 1.0).with_stepsize(StepsizePolicy::Constant(1.0));
        assert!(termination_law(&cfg, 3).is_err());
    }

    #[test]
    fn stepsize_above_cap_rejected() {
        let cfg =
            SolverConfig::new(100, 1.0, 0.0, 1.0).with_stepsize(StepsizePolicy::Constant(1.5));
        assert!(termination_law(&cfg, 3).is_err());
    }

    #[test]
    fn single_iteration_always_returns_one() {
        let law = TerminationLaw::new(&[0.5], 1.0, 1.0, false).unwrap();
        let mut s = Stream::new(0);
        assert!((0..100).all(|_| law.sample(&mut s) == 1));
    }
}
