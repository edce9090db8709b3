//! One-versus-one multiclass training and voting.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::anneal::{prox_dist_fit, FitReport};
use crate::data::{binarize, Dataset, DesignMatrix};
use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, kernel_design, KernelModel, KernelSpec};
use crate::solver::{FitConfig, Problem};
use crate::sparsity::{nonzero_count, SparsityConstraint};

/// Starting point from univariate regressions of `y` on each column:
/// `beta_j = cov(x_j, y) / var(x_j)` and `beta_{p+1} = mean(y)`. Constant
/// columns get a zero slope.
pub fn init_heuristic(d: &DesignMatrix) -> DVector<f64> {
    let x = d.x();
    let y = d.y();
    let n = d.n() as f64;
    let p = d.p();
    let y_mean = y.sum() / n;
    let mut beta = DVector::zeros(p + 1);
    for j in 0..p {
        let col = x.column(j);
        if col.min() == col.max() {
            continue;
        }
        let x_mean = col.sum() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for i in 0..d.n() {
            let dx = col[i] - x_mean;
            sxy += dx * (y[i] - y_mean);
            sxx += dx * dx;
        }
        beta[j] = sxy / sxx;
    }
    beta[p] = y_mean;
    beta
}

/// Sparsity requested either as a count `k` or as a fraction `s = 1 - k/p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SparsityLevel {
    Count(usize),
    Fraction(f64),
}

impl SparsityLevel {
    pub fn constraint(&self, p: usize) -> Result<SparsityConstraint> {
        match *self {
            SparsityLevel::Count(k) => SparsityConstraint::new(k, p),
            SparsityLevel::Fraction(s) => SparsityConstraint::from_fraction(s, p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairModel {
    Linear(DVector<f64>),
    Kernel(KernelModel),
}

impl PairModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            PairModel::Linear(beta) => {
                let p = beta.len() - 1;
                x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>() + beta[p]
            }
            PairModel::Kernel(m) => m.score(x),
        }
    }

    /// Feature weights (linear) or dual coefficients (kernel), intercept last.
    pub fn coefficients(&self) -> &DVector<f64> {
        match self {
            PairModel::Linear(beta) => beta,
            PairModel::Kernel(m) => &m.alpha,
        }
    }

    /// Fraction of zero non-intercept coefficients.
    pub fn observed_sparsity(&self) -> f64 {
        let c = self.coefficients();
        let p = c.len() - 1;
        if p == 0 {
            return 0.0;
        }
        1.0 - nonzero_count(c) as f64 / p as f64
    }
}

/// Binary classifier voting for `positive` when its score is nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct PairClassifier {
    pub positive: usize,
    pub negative: usize,
    pub model: PairModel,
}

impl PairClassifier {
    pub fn vote(&self, x: &[f64]) -> usize {
        if self.model.score(x) >= 0.0 {
            self.positive
        } else {
            self.negative
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OvoModel {
    pub class_names: Vec<String>,
    pub pairs: Vec<PairClassifier>,
}

impl OvoModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        predict_ovo(self, x)
    }

    pub fn predict_rows(&self, features: &DMatrix<f64>) -> Vec<usize> {
        let rows: Vec<Vec<f64>> = features.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.par_iter().map(|x| predict_ovo(self, x)).collect()
    }

    /// Observed sparsity averaged over the pair classifiers.
    pub fn mean_sparsity(&self) -> f64 {
        self.pairs.iter().map(|c| c.model.observed_sparsity()).sum::<f64>() / self.pairs.len() as f64
    }
}

/// Majority vote over the pair classifiers; ties go to the lowest class id.
pub fn predict_ovo(model: &OvoModel, x: &[f64]) -> usize {
    let mut votes = vec![0usize; model.class_names.len()];
    for c in &model.pairs {
        votes[c.vote(x)] += 1;
    }
    let mut best = 0;
    for (class, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = class;
        }
    }
    best
}

struct PairProblem {
    positive: usize,
    negative: usize,
    problem: Problem,
    /// Bandwidth and training features for kernel pairs.
    kernel: Option<(f64, DMatrix<f64>)>,
}

/// Per-pair training problems over one dataset. Designs and SVDs are built
/// once and reused for every sparsity level fitted through [`Self::fit`].
pub struct OvoProblems {
    class_names: Vec<String>,
    pairs: Vec<PairProblem>,
}

impl OvoProblems {
    pub fn new(ds: &Dataset, kernel: Option<KernelSpec>, svd_tol: f64) -> Result<Self> {
        let counts = ds.class_counts();
        let present: Vec<usize> = (0..ds.num_classes()).filter(|&c| counts[c] > 0).collect();
        if present.len() < 2 {
            return Err(Error::TooFewClasses);
        }
        let gamma = kernel.map(|k| k.resolve_gamma(ds.features())).transpose()?;
        let mut pairs = Vec::new();
        for (a, &i) in present.iter().enumerate() {
            for &j in &present[a + 1..] {
                pairs.push((i, j));
            }
        }
        let pairs = pairs
            .into_par_iter()
            .map(|(pos, neg)| -> Result<PairProblem> {
                let linear = binarize(ds, pos, neg)?;
                let (design, kernel) = match gamma {
                    None => (linear, None),
                    Some(g) => {
                        let rows = ds.pair_indices(pos, neg);
                        let x = ds.features().select_rows(rows.iter());
                        let k = gram_matrix(&x, g);
                        (kernel_design(&k, linear.y())?, Some((g, x)))
                    }
                };
                Ok(PairProblem {
                    positive: pos,
                    negative: neg,
                    problem: Problem::with_svd_tol(design, svd_tol),
                    kernel,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { class_names: ds.class_names().to_vec(), pairs })
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Fit every pair at `level`, starting from `warm` (one vector per pair)
    /// or from [`init_heuristic`].
    pub fn fit(
        &self,
        level: SparsityLevel,
        cfg: &FitConfig,
        warm: Option<&[DVector<f64>]>,
    ) -> Result<(OvoModel, Vec<FitReport>)> {
        if let Some(w) = warm {
            if w.len() != self.pairs.len() {
                return Err(Error::Dimension(format!("{} warm starts for {} pairs", w.len(), self.pairs.len())));
            }
        }
        let fitted = self
            .pairs
            .par_iter()
            .enumerate()
            .map(|(t, pp)| -> Result<(PairClassifier, FitReport)> {
                let tag = |e: Error| Error::Pair {
                    pos: self.class_names[pp.positive].clone(),
                    neg: self.class_names[pp.negative].clone(),
                    source: Box::new(e),
                };
                let d = pp.problem.design();
                let c = level.constraint(d.p()).map_err(tag)?;
                let beta0 = match warm {
                    Some(w) => w[t].clone(),
                    None => init_heuristic(d),
                };
                let (beta, report) = prox_dist_fit(&pp.problem, &c, &beta0, cfg).map_err(tag)?;
                let model = match &pp.kernel {
                    None => PairModel::Linear(beta),
                    Some((g, x)) => {
                        PairModel::Kernel(KernelModel::new(beta, *g, x.clone(), d.y().clone()).map_err(tag)?)
                    }
                };
                Ok((PairClassifier { positive: pp.positive, negative: pp.negative, model }, report))
            })
            .collect::<Result<Vec<_>>>()?;
        let (pairs, reports) = fitted.into_iter().unzip();
        Ok((OvoModel { class_names: self.class_names.clone(), pairs }, reports))
    }
}

/// Train one classifier per unordered pair of classes present in `ds`, each
/// started from [`init_heuristic`] on its pair-restricted data.
pub fn train_ovo(
    ds: &Dataset,
    level: SparsityLevel,
    cfg: &FitConfig,
    kernel: Option<KernelSpec>,
) -> Result<(OvoModel, Vec<FitReport>)> {
    OvoProblems::new(ds, kernel, cfg.solver.svd_tol)?.fit(level, cfg, None)
}
