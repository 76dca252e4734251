use rspg_core::oracles::{
    gaussian_difference_gradient, minibatch_mean, minibatch_smoothed_mean, smoothed_value_mc,
    variance_estimate, CountingOracle,
};
use rspg_core::problems::QuadraticModel;
use rspg_core::{FirstOrderOracle, Stream};

fn model() -> QuadraticModel {
    QuadraticModel::new(vec![1.0, 2.0, 0.5, 3.0], vec![0.5, -1.0, 2.0, 0.0], 1.2).unwrap()
}

#[test]
fn minibatch_mean_is_unbiased() {
    let m = model();
    let x = [1.0, 0.0, -1.0, 0.5];
    let exact = m.gradient(&x);
    let k = 40_000;
    let r = minibatch_mean(&m, &x, k, &Stream::new(3)).unwrap();
    // per-coordinate noise variance is sigma^2 / n
    let se = (1.2f64 * 1.2 / 4.0 / k as f64).sqrt();
    for (a, b) in r.mean_gradient.iter().zip(&exact) {
        assert!((a - b).abs() < 4.0 * se, "{a} vs {b}");
    }
}

#[test]
fn variance_estimate_recovers_sigma_squared() {
    let m = model();
    let v = variance_estimate(&m, &[0.0; 4], 50_000, &Stream::new(4)).unwrap();
    assert!((v - 1.44).abs() < 0.03, "{v}");
}

#[test]
fn noiseless_oracle_averages_exactly() {
    let m = QuadraticModel::new(vec![1.0, 3.0], vec![0.1, 0.7], 0.0).unwrap();
    let x = [0.3, -0.2];
    let r = minibatch_mean(&m, &x, 37, &Stream::new(1)).unwrap();
    assert_eq!(r.mean_gradient, m.gradient(&x));
    assert_eq!(r.sample_second_moment, 0.0);
    assert_eq!(variance_estimate(&m, &x, 10, &Stream::new(2)).unwrap(), 0.0);
}

#[test]
fn counting_oracle_counts_every_query() {
    let m = model();
    let counter = CountingOracle::new(&m);
    minibatch_mean(&counter, &[0.0; 4], 25, &Stream::new(0)).unwrap();
    minibatch_smoothed_mean(&counter, &[0.0; 4], 0.1, 7, &Stream::new(0)).unwrap();
    assert_eq!(counter.sfo_calls(), 25);
    assert_eq!(counter.szo_calls(), 7);
    assert_eq!(FirstOrderOracle::dim(&counter), 4);
}

#[test]
fn smoothed_quadratic_value_shifts_by_half_trace() {
    let a = [1.0, 2.0, 0.5, 3.0];
    let f = |x: &[f64]| 0.5 * x.iter().zip(&a).map(|(x, a)| a * x * x).sum::<f64>();
    let x = [0.4, -0.3, 1.0, 0.2];
    for (i, mu) in [0.05, 0.3, 1.0].into_iter().enumerate() {
        let est = smoothed_value_mc(f, &x, mu, 200_000, &mut Stream::new(10 + i as u64)).unwrap();
        let exact = f(&x) + 0.5 * mu * mu * a.iter().sum::<f64>();
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error,
            "mu = {mu}: {} vs {exact} (se {})",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn smoothed_gradient_estimator_is_unbiased_for_quadratics() {
    // the smoothed gradient of a quadratic is its gradient
    let m = QuadraticModel::new(vec![1.0, 2.0, 0.5], vec![0.0; 3], 0.0).unwrap();
    let x = [0.5, -0.4, 1.0];
    let mu = 0.2;
    let k = 200_000;
    let root = Stream::new(21);
    let mut sum = [0.0; 3];
    let mut sum_sq = [0.0; 3];
    for i in 0..k {
        let g = gaussian_difference_gradient(&m, &x, mu, &mut root.fork(i)).unwrap();
        for j in 0..3 {
            sum[j] += g[j];
            sum_sq[j] += g[j] * g[j];
        }
    }
    let exact = m.gradient(&x);
    for j in 0..3 {
        let mean = sum[j] / k as f64;
        let var = sum_sq[j] / k as f64 - mean * mean;
        let se = (var / k as f64).sqrt();
        assert!(
            (mean - exact[j]).abs() < 4.0 * se,
            "coord {j}: {mean} vs {}",
            exact[j]
        );
    }
}

#[test]
fn shared_noise_keeps_small_mu_stable() {
    // both evaluations see the same xi, so the quotient has no 1/mu noise term
    let m = QuadraticModel::isotropic(vec![0.0; 2], 5.0).unwrap();
    let x = [1.0, 1.0];
    let tiny = gaussian_difference_gradient(&m, &x, 1e-7, &mut Stream::new(8)).unwrap();
    let small = gaussian_difference_gradient(&m, &x, 1e-3, &mut Stream::new(8)).unwrap();
    for (a, b) in tiny.iter().zip(&small) {
        assert!((a - b).abs() < 1e-2 * (1.0 + b.abs()), "{a} vs {b}");
    }
}
