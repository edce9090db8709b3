//! Projection onto the sparsity set `S_k`.
//!
//! `S_k` holds the vectors of length `p + 1` with at most `k` nonzero entries
//! among the first `p`; the trailing intercept is unconstrained and passes
//! through projection untouched.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SparsityConstraint {
    k: usize,
    p: usize,
}

impl SparsityConstraint {
    pub fn new(k: usize, p: usize) -> Result<Self> {
        if k > p {
            return Err(Error::InvalidArgument(format!("sparsity k = {k} exceeds p = {p}")));
        }
        Ok(Self { k, p })
    }

    /// Retained count for a sparsity fraction `s = 1 - k/p`, rounded to the
    /// nearest integer.
    pub fn from_fraction(s: f64, p: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("sparsity fraction {s} outside [0, 1]")));
        }
        Self::new(((1.0 - s) * p as f64).round() as usize, p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `p - k + 1`, the normalization of the distance penalty.
    pub fn penalty_denominator(&self) -> f64 {
        (self.p - self.k + 1) as f64
    }

    /// Displayed sparsity `1 - k/p`.
    pub fn fraction(&self) -> f64 {
        if self.p == 0 {
            0.0
        } else {
            1.0 - self.k as f64 / self.p as f64
        }
    }
}

/// Indices (among the first `p`) of the `k` largest magnitudes. Equal
/// magnitudes at the boundary favour the lower index. Expected O(p).
pub fn top_k_indices(beta: &[f64], c: &SparsityConstraint) -> Vec<usize> {
    let (k, p) = (c.k, c.p);
    let mut idx: Vec<usize> = (0..p).collect();
    if k == 0 {
        idx.clear();
        return idx;
    }
    if k < p {
        idx.select_nth_unstable_by(k - 1, |&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
        idx.truncate(k);
    }
    idx
}

/// Nearest point of `S_k` to `beta`, written into `out`.
pub fn project_into(beta: &DVector<f64>, c: &SparsityConstraint, out: &mut DVector<f64>) {
    debug_assert_eq!(beta.len(), c.p + 1);
    out.fill(0.0);
    for j in top_k_indices(beta.as_slice(), c) {
        out[j] = beta[j];
    }
    out[c.p] = beta[c.p];
}

pub fn project(beta: &DVector<f64>, c: &SparsityConstraint) -> DVector<f64> {
    let mut out = DVector::zeros(beta.len());
    project_into(beta, c, &mut out);
    out
}

/// `||beta - P(beta)||^2`: the sum of squares of the `p - k` smallest
/// non-intercept magnitudes.
pub fn sq_distance(beta: &DVector<f64>, c: &SparsityConstraint) -> f64 {
    let mut keep = vec![false; c.p];
    for j in top_k_indices(beta.as_slice(), c) {
        keep[j] = true;
    }
    (0..c.p).filter(|&j| !keep[j]).map(|j| beta[j] * beta[j]).sum()
}

/// Number of nonzero non-intercept coefficients.
pub fn nonzero_count(beta: &DVector<f64>) -> usize {
    beta.rows(0, beta.len() - 1).iter().filter(|&&v| v != 0.0).count()
}
