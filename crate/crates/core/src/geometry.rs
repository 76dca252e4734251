//! Distance generating functions, Bregman divergences and the generalized
//! projection (prox-step) used by every solver.
//!
//! A prox-step solves
//!
//! ```text
//! x+ = argmin_{u in X} <g, u> + V(u, x) / gamma + h(u)
//! ```
//!
//! in closed form for the supported (geometry, set, term) combinations and
//! returns the projected gradient mapping `(x - x+) / gamma` alongside it.
//! Combinations without a closed form are rejected with
//! [`Error::UnsupportedCombination`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::linalg;

/// Coordinates of entropy iterates are floored here after a multiplicative update.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Tolerance used when checking that a point lies on the simplex.
const SIMPLEX_TOL: f64 = 1e-9;

/// Distance generating function together with its norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `omega(x) = |x|_2^2 / 2`, modulus 1 w.r.t. the l2 norm.
    Euclidean,
    /// `omega(x) = sum x_i ln x_i` on the standard simplex, modulus 1 w.r.t. the l1 norm.
    EntropySimplex,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::EntropySimplex => "entropy_simplex",
        }
    }

    /// Strong convexity modulus `alpha`.
    pub fn modulus(&self) -> f64 {
        1.0
    }

    /// Norm in which `omega` is strongly convex.
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            Geometry::Euclidean => linalg::norm2(v),
            Geometry::EntropySimplex => linalg::norm1(v),
        }
    }

    /// Dual of [`Geometry::norm`]; gradients are measured in this norm.
    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self {
            Geometry::Euclidean => linalg::norm2(v),
            Geometry::EntropySimplex => linalg::norm_inf(v),
        }
    }

    pub fn omega(&self, x: &[f64]) -> Result<f64> {
        match self {
            Geometry::Euclidean => Ok(0.5 * linalg::norm2_sq(x)),
            Geometry::EntropySimplex => {
                if x.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                    return Err(invalid_input("entropy omega needs nonnegative coordinates"));
                }
                Ok(x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum())
            }
        }
    }

    pub fn omega_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Geometry::Euclidean => Ok(x.to_vec()),
            Geometry::EntropySimplex => {
                if x.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
                    return Err(invalid_input(
                        "entropy gradient is singular on the simplex boundary",
                    ));
                }
                Ok(x.iter().map(|&v| v.ln() + 1.0).collect())
            }
        }
    }
}

/// Closed convex feasible region `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    AllSpace,
    /// Per-coordinate bounds; infinite bounds are allowed.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Standard simplex `{x >= 0, sum x = 1}`.
    Simplex,
    /// `[lower, upper]` on coordinate `index`, every other coordinate free.
    CoordinateBox {
        index: usize,
        lower: f64,
        upper: f64,
    },
}

impl FeasibleSet {
    pub fn name(&self) -> &'static str {
        match self {
            FeasibleSet::AllSpace => "all_space",
            FeasibleSet::Box { .. } => "box",
            FeasibleSet::Simplex => "simplex",
            FeasibleSet::CoordinateBox { .. } => "coordinate_box",
        }
    }

    pub fn unit_box(n: usize, lower: f64, upper: f64) -> Self {
        FeasibleSet::Box {
            lower: vec![lower; n],
            upper: vec![upper; n],
        }
    }

    /// Checks that the set is well formed in dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(invalid_input("box bounds have the wrong dimension"));
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| l > u || l.is_nan() || u.is_nan())
                {
                    return Err(invalid_input("box has lower > upper"));
                }
            }
            FeasibleSet::CoordinateBox {
                index,
                lower,
                upper,
            } => {
                if *index >= n {
                    return Err(invalid_input("coordinate box index out of range"));
                }
                if lower > upper || lower.is_nan() || upper.is_nan() {
                    return Err(invalid_input("coordinate box has lower > upper"));
                }
            }
            FeasibleSet::AllSpace | FeasibleSet::Simplex => {}
        }
        Ok(())
    }

    /// Interval constraint on coordinate `i` (infinite when free).
    fn bounds(&self, i: usize) -> (f64, f64) {
        match self {
            FeasibleSet::Box { lower, upper } => (lower[i], upper[i]),
            FeasibleSet::CoordinateBox {
                index,
                lower,
                upper,
            } if *index == i => (*lower, *upper),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            FeasibleSet::Simplex => {
                x.iter().all(|&v| v >= -tol)
                    && (x.iter().sum::<f64>() - 1.0).abs() <= tol.max(SIMPLEX_TOL)
            }
            _ => (0..x.len()).all(|i| {
                let (l, u) = self.bounds(i);
                x[i] >= l - tol && x[i] <= u + tol
            }),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate(x.len())?;
        match self {
            FeasibleSet::Simplex => Ok(project_simplex(x)),
            _ => Ok((0..x.len())
                .map(|i| {
                    let (l, u) = self.bounds(i);
                    x[i].clamp(l, u)
                })
                .collect()),
        }
    }
}

/// Sort-based Euclidean projection onto the standard simplex.
fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if s - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Simple convex term `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimpleTerm {
    Zero,
    L1 { weight: f64 },
}

impl SimpleTerm {
    pub fn name(&self) -> &'static str {
        match self {
            SimpleTerm::Zero => "zero",
            SimpleTerm::L1 { .. } => "l1",
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SimpleTerm::Zero => 0.0,
            SimpleTerm::L1 { weight } => weight * linalg::norm1(x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SimpleTerm::L1 { weight } if !(*weight >= 0.0 && weight.is_finite()) => {
                Err(invalid_input("l1 weight must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    /// Subdifferential of the scalar term at `u` as an interval.
    fn subdifferential(&self, u: f64) -> (f64, f64) {
        match self {
            SimpleTerm::Zero => (0.0, 0.0),
            SimpleTerm::L1 { weight } => {
                if u > 0.0 {
                    (*weight, *weight)
                } else if u < 0.0 {
                    (-weight, -weight)
                } else {
                    (-weight, *weight)
                }
            }
        }
    }
}

/// Output of one prox-step.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub x_plus: Vec<f64>,
    /// Projected gradient `(x - x_plus) / gamma`.
    pub mapping: Vec<f64>,
    /// Norm of the first-order optimality violation of the prox subproblem at `x_plus`.
    pub objective_residual: f64,
}

/// Bregman prox-function `V(x, z) = omega(x) - omega(z) - <grad omega(z), x - z>`.
pub fn bregman_divergence(geometry: Geometry, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(invalid_input("dimension mismatch"));
    }
    match geometry {
        Geometry::Euclidean => Ok(0.5 * linalg::dist2(x, z).powi(2)),
        Geometry::EntropySimplex => {
            if !FeasibleSet::Simplex.contains(x, SIMPLEX_TOL) {
                return Err(invalid_input("entropy divergence needs x on the simplex"));
            }
            if z.iter().any(|&v| v <= 0.0) || !FeasibleSet::Simplex.contains(z, SIMPLEX_TOL) {
                return Err(invalid_input(
                    "entropy divergence needs z strictly inside the simplex",
                ));
            }
            let cross: f64 = x
                .iter()
                .zip(z)
                .filter(|(&xi, _)| xi > 0.0)
                .map(|(&xi, &zi)| xi * (xi / zi).ln())
                .sum();
            let mass: f64 = z.iter().sum::<f64>() - x.iter().sum::<f64>();
            Ok((cross + mass).max(0.0))
        }
    }
}

/// Composite prox description: geometry, feasible set and simple term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxSetup {
    pub geometry: Geometry,
    pub set: FeasibleSet,
    pub term: SimpleTerm,
}

impl ProxSetup {
    pub fn new(geometry: Geometry, set: FeasibleSet, term: SimpleTerm) -> Self {
        ProxSetup {
            geometry,
            set,
            term,
        }
    }

    pub fn euclidean_unconstrained() -> Self {
        Self::new(Geometry::Euclidean, FeasibleSet::AllSpace, SimpleTerm::Zero)
    }

    pub fn modulus(&self) -> f64 {
        self.geometry.modulus()
    }

    /// Composite value `f(x) + h(x)` given `f(x)`.
    pub fn composite(&self, f_value: f64, x: &[f64]) -> f64 {
        f_value + self.term.value(x)
    }

    pub fn divergence(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        bregman_divergence(self.geometry, x, z)
    }

    fn unsupported(&self) -> Error {
        Error::UnsupportedCombination {
            geometry: self.geometry.name(),
            set: self.set.name(),
            term: self.term.name(),
        }
    }

    /// Checks that the combination has a closed-form prox.
    pub fn check_supported(&self) -> Result<()> {
        match (self.geometry, &self.set, &self.term) {
            (Geometry::Euclidean, FeasibleSet::Simplex, _) => Err(self.unsupported()),
            (Geometry::Euclidean, _, _) => Ok(()),
            (Geometry::EntropySimplex, FeasibleSet::Simplex, SimpleTerm::Zero) => Ok(()),
            (Geometry::EntropySimplex, _, _) => Err(self.unsupported()),
        }
    }

    /// Generalized projection of `x` along `g` with stepsize `gamma`.
    pub fn prox_step(&self, x: &[f64], g: &[f64], gamma: f64) -> Result<ProxResult> {
        self.check_supported()?;
        self.term.validate()?;
        let n = x.len();
        if g.len() != n {
            return Err(invalid_input("gradient and point dimensions differ"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid_input(format!(
                "stepsize must be positive, got {gamma}"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(invalid_input("gradient has non-finite entries"));
        }
        self.set.validate(n)?;
        if !self.set.contains(x, SIMPLEX_TOL) {
            return Err(invalid_input("prox center is outside the feasible set"));
        }
        let (x_plus, residual) = match self.geometry {
            Geometry::Euclidean => self.euclidean_prox(x, g, gamma),
            Geometry::EntropySimplex => entropy_prox(x, g, gamma)?,
        };
        let mapping = x
            .iter()
            .zip(&x_plus)
            .map(|(a, b)| (a - b) / gamma)
            .collect();
        Ok(ProxResult {
            x_plus,
            mapping,
            objective_residual: residual,
        })
    }

    /// Projected gradient mapping `P_X(x, g, gamma)`.
    pub fn gradient_mapping(&self, x: &[f64], g: &[f64], gamma: f64) -> Result<Vec<f64>> {
        self.prox_step(x, g, gamma).map(|r| r.mapping)
    }

    fn euclidean_prox(&self, x: &[f64], g: &[f64], gamma: f64) -> (Vec<f64>, f64) {
        let mut x_plus = Vec::with_capacity(x.len());
        let mut residual_sq = 0.0;
        for i in 0..x.len() {
            let y = x[i] - gamma * g[i];
            let shrunk = match self.term {
                SimpleTerm::Zero => y,
                SimpleTerm::L1 { weight } => soft_threshold(y, gamma * weight),
            };
            let (lo, hi) = self.set.bounds(i);
            let u = shrunk.clamp(lo, hi);

            // 0 in g + (u - x)/gamma + dh(u) + N(u), coordinatewise.
            let c = g[i] + (u - x[i]) / gamma;
            let (mut a, mut b) = self.term.subdifferential(u);
            if u <= lo {
                a = f64::NEG_INFINITY;
            }
            if u >= hi {
                b = f64::INFINITY;
            }
            let target = -c;
            let gap = if target < a {
                a - target
            } else if target > b {
                target - b
            } else {
                0.0
            };
            residual_sq += gap * gap;
            x_plus.push(u);
        }
        (x_plus, residual_sq.sqrt())
    }
}

/// Componentwise soft-threshold; `|y| <= t` maps to exactly zero.
pub fn soft_threshold(y: f64, t: f64) -> f64 {
    if y > t {
        y - t
    } else if y < -t {
        y + t
    } else {
        0.0
    }
}

fn entropy_prox(x: &[f64], g: &[f64], gamma: f64) -> Result<(Vec<f64>, f64)> {
    if x.iter().any(|&v| v <= 0.0) {
        return Err(invalid_input(
            "entropy prox center must have strictly positive coordinates",
        ));
    }
    let logits: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(&xi, &gi)| xi.ln() - gamma * gi)
        .collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut u: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = u.iter().sum();
    for v in u.iter_mut() {
        *v = (*v / total).max(ENTROPY_FLOOR);
    }
    let total: f64 = u.iter().sum();
    for v in u.iter_mut() {
        *v /= total;
    }

    // Stationarity: g + (ln u - ln x)/gamma must be constant across coordinates.
    let c: Vec<f64> = (0..x.len())
        .map(|i| g[i] + (u[i].ln() - x[i].ln()) / gamma)
        .collect();
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let residual = c
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        .sqrt();
    Ok((u, residual))
}

/// Free-function form of [`ProxSetup::prox_step`].
pub fn prox_step(
    geometry: Geometry,
    set: &FeasibleSet,
    term: SimpleTerm,
    x: &[f64],
    g: &[f64],
    gamma: f64,
) -> Result<ProxResult> {
    ProxSetup::new(geometry, set.clone(), term).prox_step(x, g, gamma)
}

/// Free-function form of [`ProxSetup::gradient_mapping`].
pub fn gradient_mapping(
    geometry: Geometry,
    set: &FeasibleSet,
    term: SimpleTerm,
    x: &[f64],
    g: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    prox_step(geometry, set, term, x, g, gamma).map(|r| r.mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn euclid(set: FeasibleSet, term: SimpleTerm) -> ProxSetup {
        ProxSetup::new(Geometry::Euclidean, set, term)
    }

    #[test]
    fn euclidean_divergence_is_half_squared_distance() {
        let v = bregman_divergence(Geometry::Euclidean, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn divergence_to_self_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(
            bregman_divergence(Geometry::Euclidean, &p, &p).unwrap(),
            0.0
        );
        assert_eq!(
            bregman_divergence(Geometry::EntropySimplex, &p, &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn entropy_divergence_is_kl() {
        // 0.5 ln(0.5/0.9) + 0.5 ln(0.5/0.1), evaluated independently.
        let v = bregman_divergence(Geometry::EntropySimplex, &[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert_abs_diff_eq!(v, 0.510_825_623_765_990_7, epsilon = 1e-12);
    }

    #[test]
    fn entropy_divergence_rejects_boundary_center() {
        let err = bregman_divergence(Geometry::EntropySimplex, &[0.5, 0.5], &[1.0, 0.0]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn unconstrained_step() {
        let r = euclid(FeasibleSet::AllSpace, SimpleTerm::Zero)
            .prox_step(&[1.0, 2.0], &[1.0, 0.0], 0.5)
            .unwrap();
        assert_eq!(r.x_plus, vec![0.5, 2.0]);
        assert_eq!(r.mapping, vec![1.0, 0.0]);
        assert_eq!(r.objective_residual, 0.0);
    }

    #[test]
    fn l1_soft_threshold() {
        let r = euclid(FeasibleSet::AllSpace, SimpleTerm::L1 { weight: 0.1 })
            .prox_step(&[1.0, -0.04, 0.0], &[0.0, 0.0, 0.0], 1.0)
            .unwrap();
        assert_abs_diff_eq!(r.x_plus[0], 0.9, epsilon = 1e-15);
        assert_eq!(r.x_plus[1], 0.0);
        assert_eq!(r.x_plus[2], 0.0);
    }

    #[test]
    fn soft_threshold_tie_maps_to_zero() {
        assert_eq!(soft_threshold(0.25, 0.25), 0.0);
        assert_eq!(soft_threshold(-0.25, 0.25), 0.0);
    }

    #[test]
    fn box_step_projects_back() {
        let r = euclid(FeasibleSet::unit_box(2, 0.0, 1.0), SimpleTerm::Zero)
            .prox_step(&[0.0, 0.5], &[1.0, 0.0], 1.0)
            .unwrap();
        assert_eq!(r.x_plus, vec![0.0, 0.5]);
        assert_eq!(r.mapping, vec![0.0, 0.0]);
    }

    #[test]
    fn entropy_step_matches_multiplicative_update() {
        let setup = ProxSetup::new(
            Geometry::EntropySimplex,
            FeasibleSet::Simplex,
            SimpleTerm::Zero,
        );
        let r = setup.prox_step(&[0.5, 0.5], &[1.0, 0.0], 0.25).unwrap();
        let a = (-0.25f64).exp();
        assert_abs_diff_eq!(r.x_plus[0], a / (a + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(r.x_plus[0], 0.4378, epsilon = 1e-4);
        assert!(r.objective_residual < 1e-12);
    }

    #[test]
    fn mapping_equals_gradient_when_unconstrained() {
        let m = euclid(FeasibleSet::AllSpace, SimpleTerm::Zero)
            .gradient_mapping(&[0.3, -2.0], &[3.0, -1.0], 0.7)
            .unwrap();
        assert_abs_diff_eq!(m[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_gradient_gives_zero_mapping() {
        let setups = [
            euclid(FeasibleSet::AllSpace, SimpleTerm::Zero),
            euclid(FeasibleSet::unit_box(3, -1.0, 1.0), SimpleTerm::Zero),
            ProxSetup::new(
                Geometry::EntropySimplex,
                FeasibleSet::Simplex,
                SimpleTerm::Zero,
            ),
        ];
        let x = [0.2, 0.3, 0.5];
        for s in &setups {
            let m = s.gradient_mapping(&x, &[0.0; 3], 0.9).unwrap();
            assert!(m.iter().all(|v| v.abs() < 1e-15), "{s:?}: {m:?}");
        }
    }

    #[test]
    fn unsupported_combinations_fail_loudly() {
        let cases = [
            ProxSetup::new(Geometry::Euclidean, FeasibleSet::Simplex, SimpleTerm::Zero),
            ProxSetup::new(
                Geometry::EntropySimplex,
                FeasibleSet::AllSpace,
                SimpleTerm::Zero,
            ),
            ProxSetup::new(
                Geometry::EntropySimplex,
                FeasibleSet::Simplex,
                SimpleTerm::L1 { weight: 1.0 },
            ),
        ];
        for s in &cases {
            let r = s.prox_step(&[0.5, 0.5], &[1.0, 0.0], 1.0);
            assert!(
                matches!(r, Err(Error::UnsupportedCombination { .. })),
                "{s:?}"
            );
        }
    }

    #[test]
    fn rejects_bad_stepsize_and_infeasible_center() {
        let s = euclid(FeasibleSet::unit_box(1, 0.0, 1.0), SimpleTerm::Zero);
        assert!(s.prox_step(&[0.5], &[1.0], 0.0).is_err());
        assert!(s.prox_step(&[0.5], &[1.0], f64::NAN).is_err());
        assert!(s.prox_step(&[2.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn coordinate_box_only_clips_its_coordinate() {
        let s = euclid(
            FeasibleSet::CoordinateBox {
                index: 1,
                lower: -0.1,
                upper: 0.1,
            },
            SimpleTerm::Zero,
        );
        let r = s.prox_step(&[5.0, 0.0], &[10.0, -10.0], 1.0).unwrap();
        assert_eq!(r.x_plus, vec![-5.0, 0.1]);
    }

    #[test]
    fn simplex_projection() {
        let p = FeasibleSet::Simplex.project(&[0.5, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[2], 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn entropy_floor_keeps_iterates_positive() {
        let s = ProxSetup::new(
            Geometry::EntropySimplex,
            FeasibleSet::Simplex,
            SimpleTerm::Zero,
        );
        let r = s.prox_step(&[0.5, 0.5], &[1e6, 0.0], 1.0).unwrap();
        assert!(r.x_plus[0] > 0.0);
        assert!(FeasibleSet::Simplex.contains(&r.x_plus, 1e-12));
        // The next step still works from the floored point.
        assert!(s.prox_step(&r.x_plus, &[0.0, 1.0], 1.0).is_ok());
    }
}
