//! Sparse support vector machines trained with proximal distance algorithms.
//!
//! A binary classifier minimizes the squared-hinge loss subject to a hard
//! sparsity constraint: at most `k` of the `p` non-intercept coefficients may
//! be nonzero. The constraint is replaced by the squared Euclidean distance to
//! the sparsity set, weighted by a penalty `rho` that is annealed upward, and
//! each fixed-`rho` subproblem is solved by majorization-minimization, either
//! in closed form through a cached thin SVD ([`solver_mm`]) or by steepest
//! descent with an exact line search ([`solver_sd`]). The outer loop lives in
//! [`anneal`].
//!
//! On top of the binary machinery sit Gaussian-kernel models ([`kernel`]),
//! one-versus-one multiclass training ([`multiclass`]), cross-validation along
//! sparsity paths with warm starts ([`eval`]) and simulated datasets
//! ([`simdata`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anneal;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod model;
pub mod multiclass;
pub mod objective;
pub mod simdata;
pub mod solver;
pub mod solver_mm;
pub mod solver_sd;
pub mod sparsity;

pub use anneal::{prox_dist_fit, sv_count, AccelPolicy, AnnealSchedule, FitReport, TraceRow};
pub use data::{
    apply_transform, binarize, load_csv, load_csv_with_classes, make_folds, make_stratified_folds, read_csv,
    read_table, thin_svd, train_test_split, write_csv, Dataset, DesignMatrix, FoldPlan, LabelColumn, RawTable, ThinSvd,
    TransformKind, TransformParams,
};
pub use error::{Error, Result};
pub use eval::{cross_validate, selection_metrics, CvOptions, CvRow, CvSelection, CvTable, SelectionMetrics};
pub use kernel::{gram_matrix, kernel_design, kernel_predict, KernelModel, KernelSpec};
pub use model::TrainedModel;
pub use multiclass::{init_heuristic, predict_ovo, train_ovo, OvoModel, PairClassifier, PairModel, SparsityLevel};
pub use objective::{hinge_loss, penalized_objective, ObjectiveState, PenaltyWeights};
pub use solver::{FitConfig, Problem, SolveReport, SolverConfig, SolverKind};
pub use sparsity::SparsityConstraint;

/// Coefficient vectors: `p` feature weights followed by the intercept.
pub type Coefficients = nalgebra::DVector<f64>;
