use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};

/// Parameters of the smooth SCAD surrogate `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScadParams {
    pub a: f64,
    pub lambda: f64,
}

impl Default for ScadParams {
    fn default() -> Self {
        ScadParams {
            a: 3.7,
            lambda: 0.01,
        }
    }
}

impl ScadParams {
    pub fn new(a: f64, lambda: f64) -> Result<Self> {
        let p = ScadParams { a, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 2.0 && self.a.is_finite()) {
            return Err(invalid_input(format!(
                "SCAD parameter a must exceed 2, got {}",
                self.a
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid_input(format!(
                "SCAD lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Value `q(a lambda) = a lambda^2 / 2` reached for all `beta >= a lambda`.
    pub fn plateau(&self) -> f64 {
        self.a * self.lambda * self.lambda / 2.0
    }

    /// `q'` without the sign check; `beta` is assumed nonnegative.
    pub(crate) fn slope(&self, beta: f64) -> f64 {
        if beta <= self.lambda {
            beta
        } else {
            (self.a * self.lambda - beta).max(0.0) / (self.a - 1.0)
        }
    }

    pub(crate) fn level(&self, beta: f64) -> f64 {
        let (a, l) = (self.a, self.lambda);
        if beta <= l {
            beta * beta / 2.0
        } else if beta < a * l {
            l * l / 2.0 + (a * l * (beta - l) - (beta * beta - l * l) / 2.0) / (a - 1.0)
        } else {
            self.plateau()
        }
    }

    /// `sum_j q(|x_j|)`.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| self.level(v.abs())).sum()
    }

    /// Adds the gradient of `sum_j q(|x_j|)` to `g`.
    pub fn add_penalty_gradient(&self, x: &[f64], g: &mut [f64]) {
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += xi.signum() * self.slope(xi.abs());
        }
    }
}

/// `q'(beta) = beta` on `[0, lambda]`, `max(0, a lambda - beta) / (a - 1)` beyond.
pub fn scad_smooth_derivative(beta: f64, params: &ScadParams) -> Result<f64> {
    check_beta(beta)?;
    params.validate()?;
    Ok(params.slope(beta))
}

/// Antiderivative of [`scad_smooth_derivative`] with `q(0) = 0`.
pub fn scad_smooth_value(beta: f64, params: &ScadParams) -> Result<f64> {
    check_beta(beta)?;
    params.validate()?;
    Ok(params.level(beta))
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid_input(format!(
            "SCAD argument must be nonnegative, got {beta}"
        )))
    }
}
