use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::geometry::ProxSetup;
use crate::linalg;
use crate::oracles::{minibatch_mean, variance_estimate, StochasticModel};
use crate::rng::{label, Stream};

/// Default pilot sample size.
pub const DEFAULT_PILOT_SAMPLES: usize = 200;

/// Safety factor applied to sampled Lipschitz quotients.
pub const LIPSCHITZ_SAFETY: f64 = 1.5;

const PILOT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzSource {
    Analytic,
    Sampled,
}

/// Problem constants estimated from a pilot sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub lipschitz: f64,
    pub lipschitz_source: LipschitzSource,
    pub sigma: f64,
    /// `sqrt(2 Psi(x_1) / L)`, valid when `Psi* >= 0`.
    pub d_tilde: f64,
    /// Largest mean-gradient norm over the pilot points.
    pub gradient_bound: f64,
    /// Pilot estimate of `Psi(x_1)`.
    pub psi_start: f64,
    pub pilot_samples: usize,
}

/// Estimates `L`, `sigma`, `D_tilde` and `M` around `x1` from `n0` oracle samples per point.
///
/// `L` is the model's analytic constant when it has one; otherwise the largest
/// gradient-difference quotient between pilot points, with common noise draws at every
/// point, times [`LIPSCHITZ_SAFETY`].
pub fn estimate_parameters<M: StochasticModel>(
    model: &M,
    setup: &ProxSetup,
    x1: &[f64],
    n0: usize,
    stream: &Stream,
) -> Result<ProblemParams> {
    if n0 < 2 {
        return Err(invalid_input("pilot sample size must be at least 2"));
    }
    if x1.len() != model.dim() {
        return Err(invalid_input(
            "start point dimension does not match the problem",
        ));
    }
    let sigma = variance_estimate(model, x1, n0, &stream.fork(0))?.sqrt();

    let values = stream.fork(1);
    let mut psi = 0.0;
    for i in 0..n0 {
        let noise = model.draw_noise(&mut values.fork(i as u64));
        psi += (model.sample_value(x1, &noise) - psi) / (i + 1) as f64;
    }
    psi += setup.term.value(x1);

    let points = pilot_points(setup, x1, &stream.fork(label::PILOT))?;
    let common = stream.fork(2);
    let grads = points
        .iter()
        .map(|p| minibatch_mean(model, p, n0, &common).map(|b| b.mean_gradient))
        .collect::<Result<Vec<_>>>()?;
    let gradient_bound = grads.iter().map(|g| linalg::norm2(g)).fold(0.0, f64::max);

    let (lipschitz, lipschitz_source) = match model.lipschitz() {
        Some(l) => (l, LipschitzSource::Analytic),
        None => {
            let mut q: f64 = 0.0;
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    let dist = linalg::dist2(&points[i], &points[j]);
                    if dist > 0.0 {
                        q = q.max(linalg::dist2(&grads[i], &grads[j]) / dist);
                    }
                }
            }
            (LIPSCHITZ_SAFETY * q, LipschitzSource::Sampled)
        }
    };
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(invalid_input(
            "could not obtain a positive Lipschitz constant",
        ));
    }
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(invalid_input(format!(
            "objective estimate {psi} at the start point must be positive"
        )));
    }
    Ok(ProblemParams {
        lipschitz,
        lipschitz_source,
        sigma,
        d_tilde: (2.0 * psi / lipschitz).sqrt(),
        gradient_bound,
        psi_start: psi,
        pilot_samples: n0,
    })
}

/// `x1` plus feasible random perturbations of radius `0.1 max(1, |x1|)`.
fn pilot_points(setup: &ProxSetup, x1: &[f64], stream: &Stream) -> Result<Vec<Vec<f64>>> {
    let radius = 0.1 * linalg::norm2(x1).max(1.0);
    let mut points = vec![x1.to_vec()];
    for k in 0..PILOT_POINTS {
        let mut s = stream.fork(k as u64);
        let dir: Vec<f64> = (0..x1.len())
            .map(|_| StandardNormal.sample(&mut s))
            .collect();
        let scale = radius / linalg::norm2(&dir).max(f64::MIN_POSITIVE);
        let moved: Vec<f64> = x1.iter().zip(&dir).map(|(x, d)| x + scale * d).collect();
        points.push(setup.set.project(&moved)?);
    }
    Ok(points)
}
