use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sparse::{dense, sparse_axpy, sparse_dot, sparse_normal, SparseVec};
use crate::error::{invalid_input, Result};
use crate::geometry::{FeasibleSet, Geometry, ProxSetup, SimpleTerm};
use crate::linalg;
use crate::oracles::StochasticModel;
use crate::rng::Stream;

/// Loss weights of the smoothed semi-supervised SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S3vmWeights {
    /// Squared hinge loss on labeled examples.
    pub labeled: f64,
    /// Exponential surrogate on unlabeled examples.
    pub unlabeled: f64,
    /// Ridge term on `x`.
    pub ridge: f64,
}

impl Default for S3vmWeights {
    fn default() -> Self {
        S3vmWeights {
            labeled: 1.0,
            unlabeled: 0.5,
            ridge: 0.5,
        }
    }
}

/// Generation settings for the semi-supervised SVM problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct S3vmSpec {
    pub n: usize,
    pub sparsity: f64,
    pub weights: S3vmWeights,
    /// Half-width of the box around `2r - 1` for the bias.
    pub delta: f64,
    /// Standard deviation of the score noise applied before taking the label sign.
    pub label_noise: f64,
    /// Size of the labeled pool used to compute the positive-label ratio `r`.
    pub pool_size: usize,
    /// Fraction of nonzero entries of the start direction.
    pub start_density: f64,
    pub start_scale: f64,
}

impl Default for S3vmSpec {
    fn default() -> Self {
        S3vmSpec {
            n: 100,
            sparsity: 0.05,
            weights: S3vmWeights::default(),
            delta: 0.1,
            label_noise: 0.1,
            pool_size: 10_000,
            start_density: 0.1,
            start_scale: 5.0,
        }
    }
}

/// Variables are `(x, b)` stored as one vector of length `n + 1` with `b` last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3vmInstance {
    pub spec: S3vmSpec,
    pub true_x: Vec<f64>,
    pub true_bias: f64,
    /// Positive-label ratio of the labeled pool.
    pub positive_ratio: f64,
    pub x1: Vec<f64>,
}

/// One labeled example `(u1, v)` and one unlabeled example `u2`.
#[derive(Debug, Clone, PartialEq)]
pub struct S3vmSample {
    pub labeled: SparseVec,
    pub label: f64,
    pub unlabeled: SparseVec,
}

pub fn gen_s3vm(spec: &S3vmSpec, stream: &Stream) -> Result<S3vmInstance> {
    if spec.n == 0 {
        return Err(invalid_input("dimension must be at least 1"));
    }
    if !(spec.sparsity > 0.0 && spec.sparsity <= 1.0) {
        return Err(invalid_input("sparsity must lie in (0, 1]"));
    }
    if !(spec.start_density > 0.0 && spec.start_density <= 1.0) {
        return Err(invalid_input("start density must lie in (0, 1]"));
    }
    let w = spec.weights;
    if [w.labeled, w.unlabeled, w.ridge]
        .iter()
        .any(|v| !(*v >= 0.0 && v.is_finite()))
    {
        return Err(invalid_input("loss weights must be nonnegative"));
    }
    if !(spec.delta > 0.0 && spec.delta.is_finite()) {
        return Err(invalid_input("bias tolerance must be positive"));
    }
    if !(spec.label_noise >= 0.0 && spec.label_noise.is_finite()) {
        return Err(invalid_input("label noise must be nonnegative"));
    }
    if spec.pool_size == 0 {
        return Err(invalid_input("labeled pool must be nonempty"));
    }
    let mut truth = stream.fork(0);
    let true_x: Vec<f64> = (0..spec.n)
        .map(|_| StandardNormal.sample(&mut truth))
        .collect();
    let mut inst = S3vmInstance {
        spec: spec.clone(),
        true_x,
        true_bias: 0.0,
        positive_ratio: 0.0,
        x1: Vec::new(),
    };
    let pool = stream.fork(1);
    let positives = (0..spec.pool_size as u64)
        .filter(|&i| {
            let mut s = pool.fork(i);
            let u = sparse_normal(spec.n, spec.sparsity, &mut s);
            inst.label(&u, &mut s) > 0.0
        })
        .count();
    inst.positive_ratio = positives as f64 / spec.pool_size as f64;
    let direction = dense(
        spec.n,
        &sparse_normal(spec.n, spec.start_density, &mut stream.fork(2)),
    );
    let mut x1 = linalg::scale(&direction, spec.start_scale);
    x1.push(inst.bias_center());
    inst.x1 = x1;
    Ok(inst)
}

impl S3vmInstance {
    fn label(&self, u: &SparseVec, stream: &mut Stream) -> f64 {
        let mut score = sparse_dot(u, &self.true_x) + self.true_bias;
        if self.spec.label_noise > 0.0 {
            score += Normal::new(0.0, self.spec.label_noise)
                .expect("validated noise")
                .sample(stream);
        }
        if score >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Curvature bound `2 w1 + 10 w2 + 2 w3` of the expected objective.
    pub fn curvature_bound(&self) -> f64 {
        let w = self.spec.weights;
        2.0 * w.labeled + 10.0 * w.unlabeled + 2.0 * w.ridge
    }

    /// `2r - 1`.
    pub fn bias_center(&self) -> f64 {
        2.0 * self.positive_ratio - 1.0
    }

    /// `R^n x [2r - 1 - delta, 2r - 1 + delta]`.
    pub fn feasible_set(&self) -> FeasibleSet {
        let c = self.bias_center();
        FeasibleSet::CoordinateBox {
            index: self.spec.n,
            lower: c - self.spec.delta,
            upper: c + self.spec.delta,
        }
    }

    pub fn setup(&self) -> ProxSetup {
        ProxSetup::new(Geometry::Euclidean, self.feasible_set(), SimpleTerm::Zero)
    }

    fn parts<'a>(&self, z: &'a [f64]) -> (&'a [f64], f64) {
        (&z[..self.spec.n], z[self.spec.n])
    }
}

impl StochasticModel for S3vmInstance {
    type Noise = S3vmSample;

    fn dim(&self) -> usize {
        self.spec.n + 1
    }

    fn draw_noise(&self, stream: &mut Stream) -> S3vmSample {
        let labeled = sparse_normal(self.spec.n, self.spec.sparsity, stream);
        let label = self.label(&labeled, stream);
        let unlabeled = sparse_normal(self.spec.n, self.spec.sparsity, stream);
        S3vmSample {
            labeled,
            label,
            unlabeled,
        }
    }

    fn sample_value(&self, z: &[f64], s: &S3vmSample) -> f64 {
        let (x, b) = self.parts(z);
        let w = self.spec.weights;
        let hinge = (1.0 - s.label * (sparse_dot(&s.labeled, x) + b)).max(0.0);
        let t = sparse_dot(&s.unlabeled, x) + b;
        w.labeled * hinge * hinge
            + w.unlabeled * (-5.0 * t * t).exp()
            + w.ridge * linalg::norm2_sq(x)
    }

    fn sample_gradient(&self, z: &[f64], s: &S3vmSample) -> Vec<f64> {
        let (x, b) = self.parts(z);
        let n = self.spec.n;
        let w = self.spec.weights;
        let mut g: Vec<f64> = x.iter().map(|v| 2.0 * w.ridge * v).collect();
        g.push(0.0);
        let hinge = (1.0 - s.label * (sparse_dot(&s.labeled, x) + b)).max(0.0);
        let c1 = -2.0 * w.labeled * s.label * hinge;
        sparse_axpy(c1, &s.labeled, &mut g[..n]);
        let t = sparse_dot(&s.unlabeled, x) + b;
        let c2 = -10.0 * w.unlabeled * t * (-5.0 * t * t).exp();
        sparse_axpy(c2, &s.unlabeled, &mut g[..n]);
        g[n] = c1 + c2;
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> S3vmInstance {
        let spec = S3vmSpec {
            n: 15,
            sparsity: 0.4,
            pool_size: 2_000,
            ..Default::default()
        };
        gen_s3vm(&spec, &Stream::new(4)).unwrap()
    }

    #[test]
    fn start_is_feasible_and_centered() {
        let p = instance();
        assert_eq!(p.x1.len(), 16);
        assert_eq!(p.x1[15], p.bias_center());
        assert!(p.feasible_set().contains(&p.x1, 0.0));
        assert!(p.positive_ratio > 0.3 && p.positive_ratio < 0.7);
    }

    #[test]
    fn sample_gradient_matches_finite_differences() {
        let p = instance();
        let mut s = Stream::new(5);
        for _ in 0..20 {
            let e = p.draw_noise(&mut s);
            let z: Vec<f64> = (0..16)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut s);
                    0.3 * v
                })
                .collect();
            let g = p.sample_gradient(&z, &e);
            let h = 1e-6;
            for i in 0..z.len() {
                let mut zp = z.clone();
                zp[i] += h;
                let mut zm = z.clone();
                zm[i] -= h;
                let fd = (p.sample_value(&zp, &e) - p.sample_value(&zm, &e)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0),
                    "{fd} vs {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn ridge_only_objective() {
        let spec = S3vmSpec {
            n: 3,
            weights: S3vmWeights {
                labeled: 0.0,
                unlabeled: 0.0,
                ridge: 0.5,
            },
            pool_size: 100,
            ..Default::default()
        };
        let p = gen_s3vm(&spec, &Stream::new(1)).unwrap();
        let e = p.draw_noise(&mut Stream::new(2));
        let z = [1.0, -2.0, 0.5, 0.03];
        assert_eq!(p.sample_value(&z, &e), 0.5 * 5.25);
        assert_eq!(p.sample_gradient(&z, &e), vec![1.0, -2.0, 0.5, 0.0]);
        assert_eq!(
            p.sample_gradient(&[0.0, 0.0, 0.0, p.bias_center()], &e),
            vec![0.0; 4]
        );
    }

    #[test]
    fn prox_clips_bias() {
        let p = instance();
        let setup = p.setup();
        let mut g = vec![0.0; 16];
        g[15] = -1e3;
        let step = setup.prox_step(&p.x1, &g, 1.0).unwrap();
        assert_eq!(step.x_plus[15], p.bias_center() + p.spec.delta);
        assert_eq!(&step.x_plus[..15], &p.x1[..15]);
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let p = instance();
        let back: S3vmInstance = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
        let bad = S3vmSpec {
            delta: 0.0,
            ..Default::default()
        };
        assert!(gen_s3vm(&bad, &Stream::new(0)).is_err());
    }
}
