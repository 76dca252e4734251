use crate::error::{invalid_config, Result};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid_config(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid_config(format!(
            "{name} must be nonnegative and finite, got {v}"
        )))
    }
}

fn clamp_ceil(inner: f64, budget: u64) -> usize {
    inner.min(budget as f64).ceil() as usize
}

/// First-order batch size `ceil(min{max{1, sigma sqrt(6 N_bar) / (4 L D_tilde)}, N_bar})`.
pub fn rspg_batch_size(budget: u64, sigma: f64, lipschitz: f64, d_tilde: f64) -> Result<usize> {
    if budget == 0 {
        return Err(invalid_config("oracle budget must be at least 1"));
    }
    check_nonnegative("sigma", sigma)?;
    check_positive("Lipschitz constant", lipschitz)?;
    check_positive("D_tilde", d_tilde)?;
    let ratio = sigma * (6.0 * budget as f64).sqrt() / (4.0 * lipschitz * d_tilde);
    Ok(clamp_ceil(ratio.max(1.0), budget))
}

/// Zeroth-order batch size
/// `ceil(min{max{sqrt((n+4)(M^2+sigma^2) N_bar) / (L D_tilde), n+4}, N_bar})`.
pub fn rspgf_batch_size(
    budget: u64,
    dim: usize,
    gradient_bound: f64,
    sigma: f64,
    lipschitz: f64,
    d_tilde: f64,
) -> Result<usize> {
    if budget == 0 {
        return Err(invalid_config("oracle budget must be at least 1"));
    }
    check_nonnegative("gradient bound", gradient_bound)?;
    check_nonnegative("sigma", sigma)?;
    check_positive("Lipschitz constant", lipschitz)?;
    check_positive("D_tilde", d_tilde)?;
    let n4 = dim as f64 + 4.0;
    let spread = (n4 * (gradient_bound.powi(2) + sigma.powi(2)) * budget as f64).sqrt()
        / (lipschitz * d_tilde);
    Ok(clamp_ceil(spread.max(n4), budget))
}

/// Largest admissible smoothing parameter.
///
/// Nonconvex: `D_psi / sqrt((n+4) N_bar)`. Convex: `sqrt(V / (alpha (n+4) N_bar))` where
/// `d_psi_or_v` is the divergence `V(x*, x_1)`.
pub fn rspgf_smoothing_mu(
    d_psi_or_v: f64,
    dim: usize,
    budget: u64,
    convex: bool,
    alpha: f64,
) -> Result<f64> {
    check_positive("distance", d_psi_or_v)?;
    check_positive("alpha", alpha)?;
    if budget == 0 {
        return Err(invalid_config("oracle budget must be at least 1"));
    }
    let scale = (dim as f64 + 4.0) * budget as f64;
    Ok(if convex {
        (d_psi_or_v / (alpha * scale)).sqrt()
    } else {
        d_psi_or_v / scale.sqrt()
    })
}

/// Number of independent runs `S = ceil(log2(2 / Lambda))`.
pub fn runs_for_confidence(lambda: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid_config(format!(
            "confidence level must lie in (0, 1), got {lambda}"
        )));
    }
    Ok((2.0 / lambda).log2().ceil() as usize)
}

/// Constants shared by the accuracy-driven parameter calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyConstants {
    pub lipschitz: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub d_psi: f64,
    pub d_tilde: f64,
}

impl AccuracyConstants {
    fn check(&self) -> Result<()> {
        check_positive("Lipschitz constant", self.lipschitz)?;
        check_positive("alpha", self.alpha)?;
        check_nonnegative("sigma", self.sigma)?;
        check_nonnegative("D_psi", self.d_psi)?;
        check_positive("D_tilde", self.d_tilde)
    }
}

/// Optimization-phase budget needed for accuracy `eps`.
pub fn budget_for_accuracy(c: &AccuracyConstants, eps: f64) -> Result<u64> {
    c.check()?;
    check_positive("accuracy", eps)?;
    let (l, a2) = (c.lipschitz, c.alpha * c.alpha);
    let d2 = c.d_psi * c.d_psi;
    let bias = 512.0 * l * l * d2 / (a2 * eps);
    let noise =
        ((c.d_tilde + d2 / c.d_tilde) * 128.0 * 6f64.sqrt() * l * c.sigma / (a2 * eps)).powi(2);
    let floor = 3.0 * c.sigma.powi(2) / (8.0 * l * l * c.d_tilde.powi(2));
    Ok(bias.max(noise).max(floor).ceil() as u64)
}

/// Post-selection sample size `T = ceil(24 S sigma^2 / (alpha^2 Lambda eps))`.
pub fn post_sample_size(sigma: f64, alpha: f64, eps: f64, lambda: f64) -> Result<usize> {
    check_nonnegative("sigma", sigma)?;
    check_positive("alpha", alpha)?;
    check_positive("accuracy", eps)?;
    let s = runs_for_confidence(lambda)? as f64;
    Ok((24.0 * s * sigma * sigma / (alpha * alpha * lambda * eps))
        .ceil()
        .max(1.0) as usize)
}

/// Post-selection sample size under light-tailed noise,
/// `ceil(24 sigma^2 / (alpha^2 eps) * (1 + sqrt(3 log2(2S / Lambda)))^2)`.
pub fn post_sample_size_light_tail(sigma: f64, alpha: f64, eps: f64, lambda: f64) -> Result<usize> {
    check_nonnegative("sigma", sigma)?;
    check_positive("alpha", alpha)?;
    check_positive("accuracy", eps)?;
    let s = runs_for_confidence(lambda)? as f64;
    let factor = 1.0 + (3.0 * (2.0 * s / lambda).log2()).sqrt();
    Ok(
        (24.0 * sigma * sigma / (alpha * alpha * eps) * factor * factor)
            .ceil()
            .max(1.0) as usize,
    )
}

/// Theoretical `(S, N_bar, T)` for a target accuracy and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoPhaseParameters {
    pub runs: usize,
    pub budget: u64,
    pub post_samples: usize,
}

pub fn two_phase_parameters(
    c: &AccuracyConstants,
    eps: f64,
    lambda: f64,
    light_tail: bool,
) -> Result<TwoPhaseParameters> {
    let post_samples = if light_tail {
        post_sample_size_light_tail(c.sigma, c.alpha, eps, lambda)?
    } else {
        post_sample_size(c.sigma, c.alpha, eps, lambda)?
    };
    Ok(TwoPhaseParameters {
        runs: runs_for_confidence(lambda)?,
        budget: budget_for_accuracy(c, eps)?,
        post_samples,
    })
}
