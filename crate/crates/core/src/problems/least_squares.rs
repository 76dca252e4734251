use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scad::ScadParams;
use super::sparse::{dense, sparse_axpy, sparse_dot, sparse_normal, SparseVec};
use crate::error::{invalid_input, Result};
use crate::linalg;
use crate::oracles::StochasticModel;
use crate::rng::Stream;

/// Generation settings for the penalized least-squares problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsqSpec {
    pub n: usize,
    /// Probability that a feature entry is nonzero.
    pub sparsity: f64,
    /// Standard deviation of the response noise.
    pub noise_sigma: f64,
    /// Fraction of nonzero entries of the true coefficients and of the start direction.
    pub truth_density: f64,
    /// Scale applied to the random start direction.
    pub start_scale: f64,
    pub scad: ScadParams,
}

impl Default for LsqSpec {
    fn default() -> Self {
        LsqSpec {
            n: 100,
            sparsity: 0.05,
            noise_sigma: 0.1,
            truth_density: 0.1,
            start_scale: 5.0,
            scad: ScadParams::default(),
        }
    }
}

/// `f(x) = E[(<x, u> - v)^2] + sum_j q(|x_j|)` with sparse Gaussian features `u` and
/// responses `v = <x_true, u> + xi`, `xi ~ N(0, noise_sigma^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqInstance {
    pub spec: LsqSpec,
    pub true_x: Vec<f64>,
    pub x1: Vec<f64>,
}

/// One data point `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqSample {
    pub features: SparseVec,
    pub response: f64,
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(invalid_input(format!("{name} must lie in (0, 1], got {v}")))
    }
}

/// Draws the true coefficients and the start point from `stream`.
pub fn gen_least_squares(spec: &LsqSpec, stream: &Stream) -> Result<LsqInstance> {
    if spec.n == 0 {
        return Err(invalid_input("dimension must be at least 1"));
    }
    check_fraction("sparsity", spec.sparsity)?;
    check_fraction("truth density", spec.truth_density)?;
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(invalid_input("noise level must be nonnegative"));
    }
    if !spec.start_scale.is_finite() {
        return Err(invalid_input("start scale must be finite"));
    }
    spec.scad.validate()?;
    let true_x = dense(
        spec.n,
        &sparse_normal(spec.n, spec.truth_density, &mut stream.fork(0)),
    );
    let direction = dense(
        spec.n,
        &sparse_normal(spec.n, spec.truth_density, &mut stream.fork(1)),
    );
    Ok(LsqInstance {
        spec: spec.clone(),
        true_x,
        x1: linalg::scale(&direction, spec.start_scale),
    })
}

impl LsqInstance {
    pub fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.true_x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.spec.sparsity * d2 + self.spec.noise_sigma.powi(2) + self.spec.scad.penalty(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x
            .iter()
            .zip(&self.true_x)
            .map(|(a, b)| 2.0 * self.spec.sparsity * (a - b))
            .collect();
        self.spec.scad.add_penalty_gradient(x, &mut g);
        g
    }

    /// Global curvature bound `2 p + 1`: `2 p` from the loss, `1` from the penalty near zero.
    pub fn curvature_bound(&self) -> f64 {
        2.0 * self.spec.sparsity + 1.0
    }

    /// Coordinates where the true coefficients vanish.
    pub fn true_zeros(&self) -> Vec<usize> {
        (0..self.true_x.len())
            .filter(|&i| self.true_x[i] == 0.0)
            .collect()
    }
}

impl StochasticModel for LsqInstance {
    type Noise = LsqSample;

    fn dim(&self) -> usize {
        self.spec.n
    }

    fn draw_noise(&self, stream: &mut Stream) -> LsqSample {
        let features = sparse_normal(self.spec.n, self.spec.sparsity, stream);
        let noise = if self.spec.noise_sigma > 0.0 {
            Normal::new(0.0, self.spec.noise_sigma)
                .expect("validated noise level")
                .sample(stream)
        } else {
            0.0
        };
        let response = sparse_dot(&features, &self.true_x) + noise;
        LsqSample { features, response }
    }

    fn sample_value(&self, x: &[f64], s: &LsqSample) -> f64 {
        let r = sparse_dot(&s.features, x) - s.response;
        r * r + self.spec.scad.penalty(x)
    }

    fn sample_gradient(&self, x: &[f64], s: &LsqSample) -> Vec<f64> {
        let r = sparse_dot(&s.features, x) - s.response;
        let mut g = vec![0.0; x.len()];
        self.spec.scad.add_penalty_gradient(x, &mut g);
        sparse_axpy(2.0 * r, &s.features, &mut g);
        g
    }

    fn exact_value(&self, x: &[f64]) -> Option<f64> {
        Some(self.value(x))
    }

    fn exact_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.gradient(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::FirstOrderOracle;

    fn instance(sigma: f64) -> LsqInstance {
        let spec = LsqSpec {
            n: 20,
            sparsity: 0.3,
            noise_sigma: sigma,
            ..Default::default()
        };
        gen_least_squares(&spec, &Stream::new(7)).unwrap()
    }

    #[test]
    fn noiseless_residual_vanishes_at_truth() {
        let p = instance(0.0);
        let truth = p.true_x.clone();
        let mut penalty = vec![0.0; truth.len()];
        p.spec.scad.add_penalty_gradient(&truth, &mut penalty);
        let mut s = Stream::new(1);
        for _ in 0..50 {
            assert_eq!(p.query(&truth, &mut s), penalty);
        }
        assert_eq!(p.gradient(&truth), penalty);
    }

    #[test]
    fn sample_gradient_matches_finite_differences() {
        let p = instance(0.5);
        let mut s = Stream::new(2);
        for _ in 0..20 {
            let e = p.draw_noise(&mut s);
            let x: Vec<f64> = sparse_normal(20, 1.0, &mut s)
                .into_iter()
                .map(|(_, v)| v)
                .collect();
            let g = p.sample_gradient(&x, &e);
            let h = 1e-6;
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fd = (p.sample_value(&xp, &e) - p.sample_value(&xm, &e)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0),
                    "{fd} vs {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn exact_gradient_matches_exact_value() {
        let p = instance(0.3);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let g = p.gradient(&x);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let p = instance(0.1);
        let text = serde_json::to_string(&p).unwrap();
        let back: LsqInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn generation_is_seeded_and_validated() {
        let spec = LsqSpec::default();
        let a = gen_least_squares(&spec, &Stream::new(3)).unwrap();
        let b = gen_least_squares(&spec, &Stream::new(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.true_x, a.x1);
        assert!(gen_least_squares(
            &LsqSpec {
                sparsity: 0.0,
                ..spec.clone()
            },
            &Stream::new(0)
        )
        .is_err());
        assert!(gen_least_squares(&LsqSpec { n: 0, ..spec }, &Stream::new(0)).is_err());
    }
}
