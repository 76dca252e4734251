//! Randomized stochastic projected gradient methods for nonconvex stochastic
//! composite optimization `min_{x in X} f(x) + h(x)`.
//!
//! - [`geometry`]: Bregman geometries, prox-steps and the projected gradient mapping.
//! - [`oracles`]: stochastic first/zeroth-order oracles and mini-batch estimators.
//! - [`solvers`]: PG, RSPG, 2-RSPG, 2-RSPG-V, RSPGF and their parameter formulas.
//! - [`problems`]: benchmark problems, pilot parameter estimation and metrics.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{FeasibleSet, Geometry, ProxResult, ProxSetup, SimpleTerm};
pub use oracles::{FirstOrderOracle, MiniBatchResult, StochasticModel, ZerothOrderOracle};
pub use rng::Stream;
