use serde::{Deserialize, Serialize};

/// Problem and run constants feeding the bound calculators. Unknown values stay `None` and
/// every bound depending on them is reported as absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub lipschitz: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    /// `D_psi = sqrt((Psi(x_1) - Psi*) / L)`.
    pub d_psi: Option<f64>,
    pub d_tilde: Option<f64>,
    /// `V(x*, x_1)` for convex problems.
    pub v_start: Option<f64>,
    /// `max_u V(x*, u)`; only finite on bounded feasible sets.
    pub v_max: Option<f64>,
    pub budget: Option<u64>,
    pub iterations: Option<usize>,
    pub batch_size: Option<usize>,
    pub stepsizes: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub gradient_bound: Option<f64>,
    pub mu: Option<f64>,
}

/// `D_psi` from an initial gap `Psi(x_1) - Psi*`.
pub fn d_psi(initial_gap: f64, lipschitz: f64) -> f64 {
    (initial_gap.max(0.0) / lipschitz).sqrt()
}

/// Theoretical bounds; `None` marks a bound whose inputs are missing or whose
/// hypotheses do not hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    /// PG, general stepsizes: `L D^2 / sum(alpha g - L g^2 / 2)`.
    pub pg_general: Option<f64>,
    /// PG with `gamma = alpha / L`: `2 L^2 D^2 / (alpha^2 N)`.
    pub pg_bound: Option<f64>,
    /// Stochastic mapping, general stepsizes and strict law.
    pub rspg_general: Option<f64>,
    /// Stochastic mapping, general stepsizes and relaxed law.
    pub rspg_relaxed: Option<f64>,
    /// Stochastic mapping at `gamma = alpha / (2L)`: `4 L^2 D^2 / (alpha^2 N) + 2 sigma^2 / (alpha^2 m)`.
    pub rspg_stochastic_mapping: Option<f64>,
    /// True mapping at `gamma = alpha / (2L)`: `8 L^2 D^2 / (alpha^2 N) + 6 sigma^2 / (alpha^2 m)`.
    pub rspg_true_mapping: Option<f64>,
    /// Convex gap at `gamma = alpha / (2L)`: `2 L V / (N alpha) + sigma^2 / (2 L m)`.
    pub rspg_convex_gap: Option<f64>,
    pub convex_nondecreasing: Option<f64>,
    pub convex_nonincreasing: Option<f64>,
    /// `B_N`, bounding `(alpha^2 / L) E|g_X|^2` under the budget-driven batch size.
    pub rspg_nonconvex: Option<f64>,
    /// `C_N`, bounding the expected convex gap under the budget-driven batch size.
    pub rspg_convex: Option<f64>,
    /// `B_N` with `D_tilde = D_psi` in the large-budget regime.
    pub rspg_nonconvex_tuned: Option<f64>,
    /// `C_N` with `D_tilde = sqrt(3 V / alpha)` in the large-budget regime.
    pub rspg_convex_tuned: Option<f64>,
    pub zeroth: ZerothOrderBounds,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZerothOrderBounds {
    /// `2(n+4)[M^2 + sigma^2 + mu^2 L^2 (n+4)^2]`.
    pub sigma_tilde_sq: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    /// Whether the budget is large enough for `theta1 = theta2 = 1`.
    pub large_budget: Option<bool>,
    pub nonconvex: Option<f64>,
    pub convex: Option<f64>,
    /// Smoothed stochastic mapping at `gamma = alpha / (2L)`.
    pub smoothed_mapping: Option<f64>,
    /// True mapping at `gamma = alpha / (2L)`.
    pub true_mapping: Option<f64>,
    pub convex_gap: Option<f64>,
    /// `B_bar` with `D_tilde = D_psi` in the large-budget regime.
    pub nonconvex_tuned: Option<f64>,
    /// `C_bar` with `D_tilde = 2 sqrt(V / alpha)` in the large-budget regime.
    pub convex_tuned: Option<f64>,
}

fn nondecreasing(s: &[f64]) -> bool {
    s.windows(2).all(|w| w[0] <= w[1])
}

fn nonincreasing(s: &[f64]) -> bool {
    s.windows(2).all(|w| w[0] >= w[1])
}

/// Evaluates every bound whose inputs are available.
pub fn compute_theory_bounds(p: &BoundInputs) -> TheoryBounds {
    let mut out = TheoryBounds::default();
    let (Some(l), Some(a)) = (p.lipschitz, p.alpha) else {
        return out;
    };
    let n_iter = p.iterations.map(|n| n as f64);
    let m = p.batch_size.map(|m| m as f64);
    let budget = p.budget.map(|b| b as f64);

    if let (Some(d), Some(steps)) = (p.d_psi, p.stepsizes.as_deref()) {
        let relaxed: f64 = steps.iter().map(|g| a * g - l * g * g / 2.0).sum();
        let strict: f64 = steps.iter().map(|g| a * g - l * g * g).sum();
        if relaxed > 0.0 {
            out.pg_general = Some(l * d * d / relaxed);
        }
        if let (Some(s), Some(m)) = (p.sigma, m) {
            let noise: f64 = s * s / a * steps.iter().map(|g| g / m).sum::<f64>();
            if strict > 0.0 {
                out.rspg_general = Some((l * d * d + noise) / strict);
            }
            if relaxed > 0.0 {
                out.rspg_relaxed = Some((l * d * d + noise) / relaxed);
            }
        }
    }
    if let (Some(steps), Some(s), Some(m)) = (p.stepsizes.as_deref(), p.sigma, m) {
        let strict: f64 = steps.iter().map(|g| a * g - l * g * g).sum();
        let noise = s * s / 2.0 * steps.iter().map(|g| g * g / m).sum::<f64>();
        if strict > 0.0 && !steps.is_empty() {
            if let Some(v) = p.v_start.filter(|_| nondecreasing(steps)) {
                out.convex_nondecreasing = Some(((a - l * steps[0]) * v + noise) / strict);
            }
            if let Some(vm) = p.v_max.filter(|_| nonincreasing(steps)) {
                let last = steps[steps.len() - 1];
                out.convex_nonincreasing = Some(((a - l * last) * vm + noise) / strict);
            }
        }
    }

    if let (Some(d), Some(n)) = (p.d_psi, n_iter) {
        out.pg_bound = Some(2.0 * l * l * d * d / (a * a * n));
        if let (Some(s), Some(m)) = (p.sigma, m) {
            out.rspg_stochastic_mapping =
                Some(4.0 * l * l * d * d / (a * a * n) + 2.0 * s * s / (a * a * m));
            out.rspg_true_mapping =
                Some(8.0 * l * l * d * d / (a * a * n) + 6.0 * s * s / (a * a * m));
        }
    }
    if let (Some(v), Some(n), Some(s), Some(m)) = (p.v_start, n_iter, p.sigma, m) {
        out.rspg_convex_gap = Some(2.0 * l * v / (n * a) + s * s / (2.0 * l * m));
    }

    if let (Some(s), Some(nb)) = (p.sigma, budget) {
        let six = 6f64.sqrt();
        if let Some(dt) = p.d_tilde {
            let clamp = (six * s / (4.0 * l * dt * nb.sqrt())).max(1.0);
            if let Some(d) = p.d_psi {
                out.rspg_nonconvex = Some(
                    16.0 * l * d * d / nb + 4.0 * six * s / nb.sqrt() * (d * d / dt + dt * clamp),
                );
            }
            if let Some(v) = p.v_start {
                out.rspg_convex = Some(
                    4.0 * l * v / (a * nb)
                        + six * s / (a * nb.sqrt()) * (v / dt + a * dt / 3.0 * clamp),
                );
            }
        }
        if let Some(d) = p.d_psi {
            out.rspg_nonconvex_tuned = Some(16.0 * l * d * d / nb + 8.0 * six * d * s / nb.sqrt());
        }
        if let Some(v) = p.v_start {
            out.rspg_convex_tuned =
                Some(4.0 * l * v / (a * nb) + 2.0 * (2.0 * v).sqrt() * s / (a * nb).sqrt());
        }
    }

    out.zeroth = zeroth_bounds(p, l, a);
    out
}

fn zeroth_bounds(p: &BoundInputs, l: f64, a: f64) -> ZerothOrderBounds {
    let mut z = ZerothOrderBounds::default();
    let (Some(dim), Some(mg), Some(s)) = (p.dim, p.gradient_bound, p.sigma) else {
        return z;
    };
    let nf = dim as f64;
    let n4 = nf + 4.0;
    let spread = (n4 * (mg * mg + s * s)).sqrt();

    if let Some(mu) = p.mu {
        let st = 2.0 * n4 * (mg * mg + s * s + mu * mu * l * l * n4 * n4);
        z.sigma_tilde_sq = Some(st);
        if let (Some(d), Some(n), Some(m)) = (p.d_psi, p.iterations, p.batch_size) {
            let (n, m) = (n as f64, m as f64);
            let base = l * l * d * d + mu * mu * l * l * nf;
            z.smoothed_mapping = Some(4.0 * base / (a * a * n) + 2.0 * st / (a * a * m));
            z.true_mapping = Some(
                mu * mu * l * l * (nf + 3.0).powi(2) / (2.0 * a * a)
                    + 16.0 * base / (a * a * n)
                    + 12.0 * st / (a * a * m),
            );
        }
        if let (Some(v), Some(n), Some(m)) = (p.v_start, p.iterations, p.batch_size) {
            z.convex_gap =
                Some(2.0 * l * v / (n as f64 * a) + st / (2.0 * l * m as f64) + mu * mu * l * nf);
        }
    }

    let Some(nb) = p.budget.map(|b| b as f64) else {
        return z;
    };
    let theta2 = (n4 / nb).max(1.0);
    z.theta2 = Some(theta2);
    if let Some(dt) = p.d_tilde {
        let theta1 = (spread / (l * dt * nb.sqrt())).max(1.0);
        z.theta1 = Some(theta1);
        z.large_budget = Some(nb >= (n4 * n4 * (mg * mg + s * s) / (l * l * dt * dt)).max(n4));
        if let Some(d) = p.d_psi {
            z.nonconvex = Some(
                (24.0 * theta2 + 41.0) * l * d * d * n4 / nb
                    + 32.0 * spread / nb.sqrt() * (d * d / dt + dt * theta1),
            );
        }
        if let Some(v) = p.v_start {
            z.convex = Some(
                (5.0 + theta2) * l * v * n4 / (a * nb)
                    + spread / (a * nb.sqrt()) * (4.0 * v / dt + a * dt * theta1),
            );
        }
    }
    if let Some(d) = p.d_psi {
        z.nonconvex_tuned = Some(65.0 * l * d * d * n4 / nb + 64.0 * d * spread / nb.sqrt());
    }
    if let Some(v) = p.v_start {
        z.convex_tuned = Some(
            6.0 * l * v * n4 / (a * nb)
                + 4.0 * (v * n4 * (mg * mg + s * s)).sqrt() / (a * nb).sqrt(),
        );
    }
    z
}
