use rand_distr::{Distribution, Normal};

use crate::error::{invalid_input, Result};
use crate::oracles::StochasticModel;
use crate::rng::Stream;

/// Separable quadratic `f(x) = 0.5 sum_i d_i (x_i - c_i)^2` with known constants.
///
/// A sample is `F(x, e) = f(x) + <e, x - c>` with `e ~ N(0, (sigma^2 / n) I)`, so
/// `G(x, e) = grad f(x) + e` and `E|G - grad f|^2 = sigma^2` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    curvature: Vec<f64>,
    center: Vec<f64>,
    sigma: f64,
}

impl QuadraticModel {
    pub fn new(curvature: Vec<f64>, center: Vec<f64>, sigma: f64) -> Result<Self> {
        if curvature.is_empty() || curvature.len() != center.len() {
            return Err(invalid_input(
                "curvature and center must be nonempty and equally long",
            ));
        }
        if curvature.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(invalid_input("curvatures must be finite and nonnegative"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid_input("sigma must be nonnegative"));
        }
        Ok(QuadraticModel {
            curvature,
            center,
            sigma,
        })
    }

    /// `0.5 |x - c|^2` in dimension `n`.
    pub fn isotropic(center: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::new(vec![1.0; center.len()], center, sigma)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .curvature
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(d, (xi, ci))| d * (xi - ci) * (xi - ci))
            .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.curvature
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(d, (xi, ci))| d * (xi - ci))
            .collect()
    }
}

impl StochasticModel for QuadraticModel {
    type Noise = Vec<f64>;

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn draw_noise(&self, stream: &mut Stream) -> Vec<f64> {
        let n = self.center.len();
        if self.sigma == 0.0 {
            return vec![0.0; n];
        }
        let normal = Normal::new(0.0, self.sigma / (n as f64).sqrt()).expect("finite sigma");
        (0..n).map(|_| normal.sample(stream)).collect()
    }

    fn sample_value(&self, x: &[f64], e: &Vec<f64>) -> f64 {
        let shift: f64 = e
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(e, (x, c))| e * (x - c))
            .sum();
        self.value(x) + shift
    }

    fn sample_gradient(&self, x: &[f64], e: &Vec<f64>) -> Vec<f64> {
        let mut g = self.gradient(x);
        for (gi, ei) in g.iter_mut().zip(e) {
            *gi += ei;
        }
        g
    }

    fn exact_value(&self, x: &[f64]) -> Option<f64> {
        Some(self.value(x))
    }

    fn exact_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.gradient(x))
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.curvature.iter().cloned().fold(0.0, f64::max))
    }

    fn sigma_bound(&self) -> Option<f64> {
        Some(self.sigma)
    }
}
