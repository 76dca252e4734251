use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Result};

/// Stepsize rule for `gamma_1 .. gamma_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StepsizePolicy {
    /// `alpha / (2L)` for the randomized methods, `alpha / L` for PG.
    Default,
    Constant(f64),
    /// One stepsize per iteration; must cover the iteration limit.
    Schedule(Vec<f64>),
}

/// Parameters shared by the stochastic solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Total oracle budget `N_bar` of one run.
    pub budget: u64,
    pub stepsize: StepsizePolicy,
    pub alpha: f64,
    pub lipschitz: f64,
    pub sigma: f64,
    /// `D_tilde`, the scale used by the batch-size formulas.
    pub d_tilde: f64,
    /// Use the relaxed termination law `alpha g - L g^2 / 2`.
    pub relaxed_law: bool,
    pub seed: u64,
    /// Overrides the batch-size formula.
    pub batch_size: Option<usize>,
    /// Gradient bound `M`, needed by the zeroth-order batch size.
    pub gradient_bound: Option<f64>,
    /// Overrides the smoothing-parameter formula.
    pub smoothing_mu: Option<f64>,
    pub record_trajectory: bool,
}

impl SolverConfig {
    pub fn new(budget: u64, lipschitz: f64, sigma: f64, d_tilde: f64) -> Self {
        SolverConfig {
            budget,
            stepsize: StepsizePolicy::Default,
            alpha: 1.0,
            lipschitz,
            sigma,
            d_tilde,
            relaxed_law: false,
            seed: 0,
            batch_size: None,
            gradient_bound: None,
            smoothing_mu: None,
            record_trajectory: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stepsize(mut self, policy: StepsizePolicy) -> Self {
        self.stepsize = policy;
        self
    }

    pub fn with_batch_size(mut self, m: usize) -> Self {
        self.batch_size = Some(m);
        self
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub(crate) fn check_constants(&self) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(invalid_config("Lipschitz constant must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid_config("modulus alpha must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid_config("sigma must be nonnegative"));
        }
        if !(self.d_tilde > 0.0 && self.d_tilde.is_finite()) {
            return Err(invalid_config("D_tilde must be positive"));
        }
        if self.budget == 0 {
            return Err(invalid_config("oracle budget must be at least 1"));
        }
        Ok(())
    }

    /// Stepsizes `gamma_1 .. gamma_n`; `default` resolves [`StepsizePolicy::Default`].
    pub(crate) fn stepsizes(&self, n: usize, default: f64) -> Result<Vec<f64>> {
        let steps = match &self.stepsize {
            StepsizePolicy::Default => vec![default; n],
            StepsizePolicy::Constant(g) => vec![*g; n],
            StepsizePolicy::Schedule(s) => {
                if s.len() < n {
                    return Err(invalid_config(format!(
                        "stepsize schedule has {} entries, need {n}",
                        s.len()
                    )));
                }
                s[..n].to_vec()
            }
        };
        Ok(steps)
    }

    /// Stepsizes for the randomized methods, validated against the termination law.
    pub(crate) fn randomized_stepsizes(&self, n: usize) -> Result<Vec<f64>> {
        let steps = self.stepsizes(n, self.alpha / (2.0 * self.lipschitz))?;
        let cap = if self.relaxed_law { 2.0 } else { 1.0 } * self.alpha / self.lipschitz;
        check_stepsizes(&steps, cap)?;
        Ok(steps)
    }
}

/// All stepsizes in `(0, cap]` with at least one strictly below `cap`.
pub(crate) fn check_stepsizes(steps: &[f64], cap: f64) -> Result<()> {
    let slack = cap * 1e-12;
    if let Some(bad) = steps.iter().find(|&&g| !(g > 0.0 && g <= cap + slack)) {
        return Err(invalid_config(format!("stepsize {bad} outside (0, {cap}]")));
    }
    if !steps.iter().any(|&g| g < cap - slack) {
        return Err(invalid_config(format!(
            "at least one stepsize must be strictly below {cap}"
        )));
    }
    Ok(())
}
