//! Gaussian-kernel classification.
//!
//! Writing `beta = sum_j y_j alpha_j phi(x_j)` turns the margin of sample `i`
//! into `y_i sum_j y_j alpha_j K_ij`, so the linear machinery applies verbatim
//! to the design `[K diag(y) | 1]` with `n` dual coefficients in place of the
//! `p` feature weights. The sparsity constraint then bounds the number of
//! training samples the model retains.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};

/// Kernel choice for training. A missing bandwidth is filled in by
/// [`median_gamma`] on the training features.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub gamma: Option<f64>,
}

impl KernelSpec {
    pub fn resolve_gamma(&self, x: &DMatrix<f64>) -> Result<f64> {
        let g = self.gamma.unwrap_or_else(|| median_gamma(x));
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel bandwidth must be positive, got {g}")));
        }
        Ok(g)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `K_ij = exp(-gamma ||a_i - b_j||^2)` between the rows of `a` and `b`.
pub fn cross_gram(a: &DMatrix<f64>, b: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let ra = rows(a);
    let rb = rows(b);
    let entries: Vec<f64> =
        ra.par_iter().flat_map_iter(|xi| rb.iter().map(move |xj| (-gamma * sq_dist(xi, xj)).exp())).collect();
    DMatrix::from_row_slice(ra.len(), rb.len(), &entries)
}

pub fn gram_matrix(x: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    assert!(gamma > 0.0, "gamma must be positive");
    cross_gram(x, x, gamma)
}

/// `1 / (p * median pairwise squared distance)`, or `1/p` when the median
/// distance is zero.
pub fn median_gamma(x: &DMatrix<f64>) -> f64 {
    let (n, p) = x.shape();
    let r = rows(x);
    let mut d: Vec<f64> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| sq_dist(&r[i], &r[j])).collect();
    if d.is_empty() {
        return 1.0 / p as f64;
    }
    let mid = d.len() / 2;
    let (_, med, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *med > 0.0 {
        1.0 / (p as f64 * *med)
    } else {
        1.0 / p as f64
    }
}

/// `[K diag(y) | 1]`.
pub fn kernel_design(k: &DMatrix<f64>, y: &DVector<f64>) -> Result<DesignMatrix> {
    let n = y.len();
    if k.shape() != (n, n) {
        return Err(Error::Dimension(format!("gram matrix {:?} for {n} labels", k.shape())));
    }
    let x = DMatrix::from_fn(n, n + 1, |i, j| if j == n { 1.0 } else { k[(i, j)] * y[j] });
    DesignMatrix::new(x, y.clone())
}

/// Trained dual coefficients with the training points they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelModel {
    /// `n` dual coefficients followed by the intercept.
    pub alpha: DVector<f64>,
    pub gamma: f64,
    pub train_x: DMatrix<f64>,
    pub train_y: DVector<f64>,
}

impl KernelModel {
    pub fn new(alpha: DVector<f64>, gamma: f64, train_x: DMatrix<f64>, train_y: DVector<f64>) -> Result<Self> {
        let n = train_x.nrows();
        if alpha.len() != n + 1 || train_y.len() != n {
            return Err(Error::Dimension(format!(
                "{} dual coefficients and {} labels for {n} training points",
                alpha.len(),
                train_y.len()
            )));
        }
        if !(gamma > 0.0) || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("kernel model needs gamma > 0 and finite alpha".into()));
        }
        Ok(Self { alpha, gamma, train_x, train_y })
    }

    pub fn intercept(&self) -> f64 {
        self.alpha[self.alpha.len() - 1]
    }

    /// Training points with nonzero dual coefficient.
    pub fn support_size(&self) -> usize {
        self.alpha.rows(0, self.alpha.len() - 1).iter().filter(|&&a| a != 0.0).count()
    }

    /// Drop training points whose coefficient is zero; predictions are unchanged.
    pub fn pruned(&self) -> KernelModel {
        let n = self.train_x.nrows();
        let keep: Vec<usize> = (0..n).filter(|&j| self.alpha[j] != 0.0).collect();
        let mut alpha = DVector::zeros(keep.len() + 1);
        for (t, &j) in keep.iter().enumerate() {
            alpha[t] = self.alpha[j];
        }
        alpha[keep.len()] = self.intercept();
        KernelModel {
            alpha,
            gamma: self.gamma,
            train_x: self.train_x.select_rows(keep.iter()),
            train_y: DVector::from_iterator(keep.len(), keep.iter().map(|&j| self.train_y[j])),
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let mut s = self.intercept();
        for (j, row) in self.train_x.row_iter().enumerate() {
            let a = self.alpha[j];
            if a != 0.0 {
                let d: f64 = row.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
                s += self.train_y[j] * a * (-self.gamma * d).exp();
            }
        }
        s
    }
}

/// `sum_j y_j alpha_j exp(-gamma ||x - x_j||^2) + intercept`.
pub fn kernel_predict(model: &KernelModel, x: &[f64]) -> f64 {
    model.score(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_entries() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let k = gram_matrix(&x, 1.0);
        assert_eq!(k[(0, 2)], 1.0);
        assert!((k[(0, 1)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((0..3).all(|i| k[(i, i)] == 1.0));
        assert_eq!(k, k.transpose());
    }

    #[test]
    fn design_scales_columns_by_labels() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 2.0]);
        let k = gram_matrix(&x, 0.7);
        let ones = DVector::from_element(3, 1.0);
        let d = kernel_design(&k, &ones).unwrap();
        assert_eq!(d.x().columns(0, 3), k);
        let y = DVector::from_vec(vec![1.0, -1.0, 1.0]);
        let d = kernel_design(&k, &y).unwrap();
        for j in 0..3 {
            assert_eq!(d.x().column(j), k.column(j) * y[j]);
        }
        assert!(d.x().column(3).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_model_and_pruning() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, -1.0, 1.0]);
        let m = KernelModel::new(DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]), 0.5, x.clone(), y.clone()).unwrap();
        assert_eq!(kernel_predict(&m, &[3.7]), 1.0);

        let m = KernelModel::new(DVector::from_vec(vec![0.4, 0.0, 1.3, -0.2]), 0.5, x, y).unwrap();
        let pruned = m.pruned();
        assert_eq!(pruned.train_x.nrows(), 2);
        for t in [-1.0, 0.3, 1.7, 4.0] {
            assert!((m.score(&[t]) - pruned.score(&[t])).abs() < 1e-15);
        }
    }

    #[test]
    fn median_heuristic() {
        // pairwise squared distances 1, 4, 1: median 1, p = 1
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        assert_eq!(median_gamma(&x), 1.0);
    }
}
