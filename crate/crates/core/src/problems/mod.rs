//! Test problems: the SCAD-penalized least-squares model, the smoothed
//! semi-supervised SVM, a known-constant quadratic, pilot parameter estimation and
//! solution metrics.

mod estimate;
mod evaluate;
mod least_squares;
mod quadratic;
mod s3vm;
mod scad;
mod sparse;

use serde::{Deserialize, Serialize};

pub use estimate::{
    estimate_parameters, LipschitzSource, ProblemParams, DEFAULT_PILOT_SAMPLES, LIPSCHITZ_SAFETY,
};
pub use evaluate::{
    evaluate_solution, zero_recovery_ratio, SolutionMetrics, DEFAULT_EVALUATION_SAMPLES,
    ZERO_THRESHOLD,
};
pub use least_squares::{gen_least_squares, LsqInstance, LsqSample, LsqSpec};
pub use quadratic::QuadraticModel;
pub use s3vm::{gen_s3vm, S3vmInstance, S3vmSample, S3vmSpec, S3vmWeights};
pub use scad::{scad_smooth_derivative, scad_smooth_value, ScadParams};
pub use sparse::SparseVec;

use crate::error::Result;
use crate::geometry::ProxSetup;
use crate::rng::Stream;

/// Generation recipe for a benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemSpec {
    LeastSquares(LsqSpec),
    S3vm(S3vmSpec),
}

/// A generated benchmark problem; serializes to a self-contained manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemInstance {
    LeastSquares(LsqInstance),
    S3vm(S3vmInstance),
}

impl ProblemSpec {
    pub fn generate(&self, stream: &Stream) -> Result<ProblemInstance> {
        Ok(match self {
            ProblemSpec::LeastSquares(s) => {
                ProblemInstance::LeastSquares(gen_least_squares(s, stream)?)
            }
            ProblemSpec::S3vm(s) => ProblemInstance::S3vm(gen_s3vm(s, stream)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::LeastSquares(_) => "least_squares",
            ProblemSpec::S3vm(_) => "s3vm",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ProblemSpec::LeastSquares(s) => s.n,
            ProblemSpec::S3vm(s) => s.n,
        }
    }

    pub fn noise(&self) -> f64 {
        match self {
            ProblemSpec::LeastSquares(s) => s.noise_sigma,
            ProblemSpec::S3vm(s) => s.label_noise,
        }
    }
}

impl ProblemInstance {
    pub fn setup(&self) -> ProxSetup {
        match self {
            ProblemInstance::LeastSquares(_) => ProxSetup::euclidean_unconstrained(),
            ProblemInstance::S3vm(p) => p.setup(),
        }
    }

    pub fn x1(&self) -> &[f64] {
        match self {
            ProblemInstance::LeastSquares(p) => &p.x1,
            ProblemInstance::S3vm(p) => &p.x1,
        }
    }

    /// True coefficients for zero-recovery scoring, where defined.
    pub fn truth(&self) -> Option<&[f64]> {
        match self {
            ProblemInstance::LeastSquares(p) => Some(&p.true_x),
            ProblemInstance::S3vm(_) => None,
        }
    }
}
