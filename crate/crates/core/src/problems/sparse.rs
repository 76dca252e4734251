use rand_distr::{Distribution, Geometric, StandardNormal};

use crate::rng::Stream;

/// Sparse vector as `(index, value)` pairs in increasing index order.
pub type SparseVec = Vec<(usize, f64)>;

/// Vector with each entry independently nonzero with probability `density`, nonzero
/// entries standard normal. Gaps between nonzeros are drawn geometrically.
pub(crate) fn sparse_normal(n: usize, density: f64, stream: &mut Stream) -> SparseVec {
    let mut out = Vec::new();
    if density >= 1.0 {
        for i in 0..n {
            out.push((i, StandardNormal.sample(stream)));
        }
        return out;
    }
    let gap = Geometric::new(density).expect("density validated by caller");
    let mut i = 0u64;
    loop {
        i += gap.sample(stream);
        if i >= n as u64 {
            break;
        }
        out.push((i as usize, StandardNormal.sample(stream)));
        i += 1;
    }
    out
}

pub(crate) fn dense(n: usize, s: &SparseVec) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(i, x) in s {
        v[i] = x;
    }
    v
}

pub(crate) fn sparse_dot(s: &SparseVec, x: &[f64]) -> f64 {
    s.iter().map(|&(i, v)| v * x[i]).sum()
}

pub(crate) fn sparse_axpy(a: f64, s: &SparseVec, y: &mut [f64]) {
    for &(i, v) in s {
        y[i] += a * v;
    }
}
