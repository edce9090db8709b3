#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pdsvm::DesignMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Gaussian features with labels from a noisy random hyperplane, so both
/// classes appear and the data are usually not separable.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DesignMatrix {
    let f = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let w = normal_vec(rng, p);
    let mut y = DVector::from_fn(n, |i, _| {
        let e: f64 = rng.sample(StandardNormal);
        if f.row(i).dot(&w.transpose()) + 0.5 * e >= 0.0 {
            1.0
        } else {
            -1.0
        }
    });
    y[0] = 1.0;
    if n > 1 {
        y[1] = -1.0;
    }
    DesignMatrix::from_features(&f, y).unwrap()
}

/// Brute-force squared distance to the sparsity set: the smallest sum of
/// squares of `p - k` dropped entries over every support of size `k`.
pub fn brute_force_distance(beta: &[f64], k: usize) -> f64 {
    let p = beta.len() - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << p) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let d: f64 = (0..p).filter(|j| mask & (1 << j) == 0).map(|j| beta[j] * beta[j]).sum();
        best = best.min(d);
    }
    best
}

/// Least-squares slope of `y` on `x`.
pub fn simple_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
