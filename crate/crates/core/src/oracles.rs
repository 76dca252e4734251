//! Stochastic first-order (SFO) and zeroth-order (SZO) oracles, mini-batch
//! averaging and the Gaussian-smoothing gradient estimator.
//!
//! Problems implement [`StochasticModel`], which separates drawing a noise
//! realization `xi` from evaluating `F(x, xi)` / `G(x, xi)`. Both oracle traits
//! are derived from it, so the two points of a shared-noise query, and the
//! value and gradient of one sample, always see the same `xi`.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_input, Result};
use crate::linalg;
use crate::rng::Stream;

/// A stochastic objective `f(x) = E[F(x, xi)]` with per-sample gradients.
pub trait StochasticModel: Sync {
    type Noise: Clone + Send + Sync;

    fn dim(&self) -> usize;

    fn draw_noise(&self, stream: &mut Stream) -> Self::Noise;

    /// `F(x, xi)`.
    fn sample_value(&self, x: &[f64], noise: &Self::Noise) -> f64;

    /// `G(x, xi) = grad_x F(x, xi)`.
    fn sample_gradient(&self, x: &[f64], noise: &Self::Noise) -> Vec<f64>;

    fn exact_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn exact_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Analytic Lipschitz constant of `grad f`, when the model knows one.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Known bound `sigma` on the gradient noise standard deviation.
    fn sigma_bound(&self) -> Option<f64> {
        None
    }
}

/// Stochastic first-order oracle.
pub trait FirstOrderOracle: Sync {
    fn dim(&self) -> usize;

    /// One raw sample `G(x, xi)`; `xi` is drawn from `stream`.
    fn query(&self, x: &[f64], stream: &mut Stream) -> Vec<f64>;

    fn true_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn sigma_bound(&self) -> Option<f64> {
        None
    }
}

/// Stochastic zeroth-order oracle.
pub trait ZerothOrderOracle: Sync {
    fn dim(&self) -> usize;

    fn query_value(&self, x: &[f64], stream: &mut Stream) -> f64;

    /// `(F(x1, xi), F(x2, xi))` with a single draw of `xi`.
    fn query_pair(&self, x1: &[f64], x2: &[f64], stream: &mut Stream) -> (f64, f64);
}

impl<M: StochasticModel> FirstOrderOracle for M {
    fn dim(&self) -> usize {
        StochasticModel::dim(self)
    }

    fn query(&self, x: &[f64], stream: &mut Stream) -> Vec<f64> {
        let xi = self.draw_noise(stream);
        self.sample_gradient(x, &xi)
    }

    fn true_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.exact_gradient(x)
    }

    fn sigma_bound(&self) -> Option<f64> {
        StochasticModel::sigma_bound(self)
    }
}

impl<M: StochasticModel> ZerothOrderOracle for M {
    fn dim(&self) -> usize {
        StochasticModel::dim(self)
    }

    fn query_value(&self, x: &[f64], stream: &mut Stream) -> f64 {
        let xi = self.draw_noise(stream);
        self.sample_value(x, &xi)
    }

    fn query_pair(&self, x1: &[f64], x2: &[f64], stream: &mut Stream) -> (f64, f64) {
        let xi = self.draw_noise(stream);
        (self.sample_value(x1, &xi), self.sample_value(x2, &xi))
    }
}

/// Wraps an oracle and counts raw queries.
///
/// SZO shared-noise queries count as one call (one pair of evaluations).
#[derive(Debug)]
pub struct CountingOracle<'a, O: ?Sized> {
    inner: &'a O,
    sfo: AtomicU64,
    szo: AtomicU64,
}

impl<'a, O: ?Sized> CountingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        CountingOracle {
            inner,
            sfo: AtomicU64::new(0),
            szo: AtomicU64::new(0),
        }
    }

    pub fn sfo_calls(&self) -> u64 {
        self.sfo.load(Ordering::Relaxed)
    }

    pub fn szo_calls(&self) -> u64 {
        self.szo.load(Ordering::Relaxed)
    }
}

impl<O: FirstOrderOracle + ?Sized> FirstOrderOracle for CountingOracle<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query(&self, x: &[f64], stream: &mut Stream) -> Vec<f64> {
        self.sfo.fetch_add(1, Ordering::Relaxed);
        self.inner.query(x, stream)
    }

    fn true_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.true_gradient(x)
    }

    fn sigma_bound(&self) -> Option<f64> {
        self.inner.sigma_bound()
    }
}

impl<O: ZerothOrderOracle + ?Sized> ZerothOrderOracle for CountingOracle<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query_value(&self, x: &[f64], stream: &mut Stream) -> f64 {
        self.szo.fetch_add(1, Ordering::Relaxed);
        self.inner.query_value(x, stream)
    }

    fn query_pair(&self, x1: &[f64], x2: &[f64], stream: &mut Stream) -> (f64, f64) {
        self.szo.fetch_add(1, Ordering::Relaxed);
        self.inner.query_pair(x1, x2, stream)
    }
}

/// Average of `m` oracle samples at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatchResult {
    pub mean_gradient: Vec<f64>,
    pub batch_size: usize,
    /// Mean of `|G_i - mean|^2` over the batch.
    pub sample_second_moment: f64,
}

/// Running (Welford) mean and scatter, updated in sample-index order.
///
/// Exact for constant samples, so a noiseless oracle averages to its gradient bit for bit.
pub(crate) struct BatchAccumulator {
    mean: Vec<f64>,
    scatter: f64,
    count: usize,
}

impl BatchAccumulator {
    pub(crate) fn new(n: usize) -> Self {
        BatchAccumulator {
            mean: vec![0.0; n],
            scatter: 0.0,
            count: 0,
        }
    }

    pub(crate) fn push(&mut self, g: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        let mut cross = 0.0;
        for (m, v) in self.mean.iter_mut().zip(g) {
            let before = v - *m;
            *m += before / k;
            cross += before * (v - *m);
        }
        self.scatter += cross;
    }

    pub(crate) fn finish(self) -> MiniBatchResult {
        let m = self.count as f64;
        MiniBatchResult {
            sample_second_moment: (self.scatter / m).max(0.0),
            mean_gradient: self.mean,
            batch_size: self.count,
        }
    }
}

/// `(1/m) sum_i G(x, xi_i)` with sample `i` drawn from `stream.fork(i)`.
pub fn minibatch_mean<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    m: usize,
    stream: &Stream,
) -> Result<MiniBatchResult> {
    if m == 0 {
        return Err(invalid_input("mini-batch size must be at least 1"));
    }
    let mut acc = BatchAccumulator::new(x.len());
    for i in 0..m {
        let g = oracle.query(x, &mut stream.fork(i as u64));
        acc.push(&g);
    }
    Ok(acc.finish())
}

fn standard_normal_vector(n: usize, stream: &mut Stream) -> Vec<f64> {
    (0..n)
        .map(|_| stream.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Gaussian-smoothing estimator `[(F(x + mu v, xi) - F(x, xi)) / mu] v`.
///
/// `v` is drawn first from `stream`, then the shared `xi`.
pub fn gaussian_difference_gradient<O: ZerothOrderOracle + ?Sized>(
    szo: &O,
    x: &[f64],
    mu: f64,
    stream: &mut Stream,
) -> Result<Vec<f64>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid_input("smoothing parameter must be positive"));
    }
    let v = standard_normal_vector(x.len(), stream);
    let shifted: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi + mu * vi).collect();
    let (f_shift, f_here) = szo.query_pair(&shifted, x, stream);
    let q = (f_shift - f_here) / mu;
    Ok(linalg::scale(&v, q))
}

/// Mean of `m` independent smoothed-gradient samples; sample `i` uses `stream.fork(i)`.
pub fn minibatch_smoothed_mean<O: ZerothOrderOracle + ?Sized>(
    szo: &O,
    x: &[f64],
    mu: f64,
    m: usize,
    stream: &Stream,
) -> Result<MiniBatchResult> {
    if m == 0 {
        return Err(invalid_input("mini-batch size must be at least 1"));
    }
    let mut acc = BatchAccumulator::new(x.len());
    for i in 0..m {
        let g = gaussian_difference_gradient(szo, x, mu, &mut stream.fork(i as u64))?;
        acc.push(&g);
    }
    Ok(acc.finish())
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `f_mu(x) = E_v[f(x + mu v)]`, `v` standard Gaussian.
pub fn smoothed_value_mc<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    mu: f64,
    samples: usize,
    stream: &mut Stream,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(invalid_input("need at least one sample"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid_input("smoothing parameter must be nonnegative"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut point = vec![0.0; x.len()];
    for _ in 0..samples {
        for (p, xi) in point.iter_mut().zip(x) {
            *p = xi + mu * stream.sample::<f64, _>(StandardNormal);
        }
        let v = f(&point);
        sum += v;
        sum_sq += v * v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = if samples > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / k).sqrt(),
    })
}

/// Unbiased sample variance `1/(n-1) sum |G_i - G_bar|^2`, used as `sigma^2`.
pub fn variance_estimate<O: FirstOrderOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    n_samples: usize,
    stream: &Stream,
) -> Result<f64> {
    if n_samples < 2 {
        return Err(invalid_input("variance estimate needs at least 2 samples"));
    }
    let mut acc = BatchAccumulator::new(x.len());
    for i in 0..n_samples {
        acc.push(&oracle.query(x, &mut stream.fork(i as u64)));
    }
    let k = n_samples as f64;
    Ok(acc.finish().sample_second_moment * k / (k - 1.0))
}

/// Sample-average approximation of a model over a fixed set of noise draws.
///
/// Its exact value and gradient are averages over the stored draws, which gives
/// a deterministic objective for methods that need exact gradients.
#[derive(Debug, Clone)]
pub struct SampleAverage<'a, M: StochasticModel> {
    model: &'a M,
    draws: Vec<M::Noise>,
}

impl<'a, M: StochasticModel> SampleAverage<'a, M> {
    pub fn new(model: &'a M, size: usize, stream: &Stream) -> Self {
        let draws = (0..size as u64)
            .map(|i| model.draw_noise(&mut stream.fork(i)))
            .collect();
        SampleAverage { model, draws }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

impl<M: StochasticModel> StochasticModel for SampleAverage<'_, M> {
    type Noise = usize;

    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn draw_noise(&self, stream: &mut Stream) -> usize {
        stream.random_range(0..self.draws.len())
    }

    fn sample_value(&self, x: &[f64], noise: &usize) -> f64 {
        self.model.sample_value(x, &self.draws[*noise])
    }

    fn sample_gradient(&self, x: &[f64], noise: &usize) -> Vec<f64> {
        self.model.sample_gradient(x, &self.draws[*noise])
    }

    fn exact_value(&self, x: &[f64]) -> Option<f64> {
        let total: f64 = self
            .draws
            .iter()
            .map(|d| self.model.sample_value(x, d))
            .sum();
        Some(total / self.draws.len() as f64)
    }

    fn exact_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; x.len()];
        for d in &self.draws {
            linalg::axpy(1.0, &self.model.sample_gradient(x, d), &mut acc);
        }
        let k = self.draws.len() as f64;
        Some(acc.into_iter().map(|v| v / k).collect())
    }

    fn lipschitz(&self) -> Option<f64> {
        self.model.lipschitz()
    }
}
